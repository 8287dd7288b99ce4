#pragma once

#include "noetic/flow/packets.hpp"

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace noetic::flow {

// Bounded hand-off of plot frames to observers. Publishing never blocks:
// a full subscriber queue discards its oldest frame.
class PlotBus {
 public:
  class Subscription {
   public:
    /// Waits up to timeout_ms for a frame; nullopt on timeout or close.
    std::optional<PlotFrame> pop(int timeout_ms);
    std::optional<PlotFrame> try_pop();
    std::uint64_t dropped() const;
    bool closed() const;

   private:
    friend class PlotBus;
    std::set<std::string> nodes;  // empty: every node
    std::size_t capacity = 64;
    mutable std::mutex mu;
    std::condition_variable cv;
    std::deque<PlotFrame> queue;
    std::uint64_t drops = 0;
    bool is_closed = false;
  };

  std::shared_ptr<Subscription> subscribe(std::set<std::string> nodes = {}, std::size_t capacity = 64);
  void unsubscribe(const std::shared_ptr<Subscription>& s);

  /// Assigns the per-node sequence number and fans the frame out.
  void publish(PlotFrame& frame);
  void close();

  std::uint64_t published() const;
  std::uint64_t dropped() const;

 private:
  mutable std::mutex mu_;
  std::vector<std::shared_ptr<Subscription>> subs_;
  std::map<std::string, std::uint64_t> seq_;
  std::uint64_t published_ = 0;
  std::uint64_t dropped_ = 0;
  bool closed_ = false;
};

}  // namespace noetic::flow
