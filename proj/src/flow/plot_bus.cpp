#include "noetic/flow/plot_bus.hpp"

#include <algorithm>
#include <chrono>

namespace noetic::flow {

std::optional<PlotFrame> PlotBus::Subscription::pop(int timeout_ms) {
  std::unique_lock lock(mu);
  cv.wait_for(lock, std::chrono::milliseconds(timeout_ms), [&] { return !queue.empty() || is_closed; });
  if (queue.empty()) return std::nullopt;
  PlotFrame f = std::move(queue.front());
  queue.pop_front();
  return f;
}

std::optional<PlotFrame> PlotBus::Subscription::try_pop() {
  std::lock_guard lock(mu);
  if (queue.empty()) return std::nullopt;
  PlotFrame f = std::move(queue.front());
  queue.pop_front();
  return f;
}

std::uint64_t PlotBus::Subscription::dropped() const {
  std::lock_guard lock(mu);
  return drops;
}

bool PlotBus::Subscription::closed() const {
  std::lock_guard lock(mu);
  return is_closed;
}

std::shared_ptr<PlotBus::Subscription> PlotBus::subscribe(std::set<std::string> nodes, std::size_t capacity) {
  auto s = std::make_shared<Subscription>();
  s->nodes = std::move(nodes);
  s->capacity = std::max<std::size_t>(1, capacity);
  std::lock_guard lock(mu_);
  s->is_closed = closed_;
  subs_.push_back(s);
  return s;
}

void PlotBus::unsubscribe(const std::shared_ptr<Subscription>& s) {
  std::lock_guard lock(mu_);
  subs_.erase(std::remove(subs_.begin(), subs_.end(), s), subs_.end());
}

void PlotBus::publish(PlotFrame& frame) {
  std::lock_guard lock(mu_);
  frame.seq = seq_[frame.node]++;
  ++published_;
  for (const auto& s : subs_) {
    if (!s->nodes.empty() && !s->nodes.count(frame.node)) continue;
    {
      std::lock_guard slock(s->mu);
      if (s->queue.size() >= s->capacity) {
        s->queue.pop_front();
        ++s->drops;
        ++dropped_;
      }
      s->queue.push_back(frame);
    }
    s->cv.notify_one();
  }
}

void PlotBus::close() {
  std::lock_guard lock(mu_);
  closed_ = true;
  for (const auto& s : subs_) {
    {
      std::lock_guard slock(s->mu);
      s->is_closed = true;
    }
    s->cv.notify_all();
  }
}

std::uint64_t PlotBus::published() const {
  std::lock_guard lock(mu_);
  return published_;
}

std::uint64_t PlotBus::dropped() const {
  std::lock_guard lock(mu_);
  return dropped_;
}

}  // namespace noetic::flow
