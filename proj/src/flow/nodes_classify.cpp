#include "noetic/classify/classifier.hpp"
#include "noetic/flow/node.hpp"
#include "noetic/io/recording.hpp"

namespace noetic::flow {

namespace {

using classify::ModelKind;

classify::ClassifierModel load_model(const NodeContext& ctx) {
  const auto path = ctx.params.at("model").get<std::string>();
  const auto& inline_model = ctx.params.at("model_json");
  if (!path.empty()) return classify::model_from_json(nlohmann::json::parse(io::read_file(path)));
  if (!inline_model.empty()) return classify::model_from_json(inline_model);
  throw Error(ctx.kind + ": needs a model (param model or model_json)");
}

class ClassifyNode : public Node {
 public:
  ClassifyNode(NodeContext c, ModelKind kind) : Node(std::move(c)), model_(load_model(ctx_)) {
    if (model_.kind != kind)
      fail(ctx_.kind + ": model is " + classify::to_string(model_.kind) + ", expected " + classify::to_string(kind));
  }
  void on_input(std::size_t, const Packet& p, Outbox& out) override {
    auto batch = std::make_shared<LabelBatch>();
    if (model_.kind == ModelKind::nb) {
      const auto& fm = *std::get<std::shared_ptr<const features::FeatureMatrix>>(p);
      for (std::size_t i = 0; i < fm.rows(); ++i) {
        const Vector x = fm.values.row(static_cast<Eigen::Index>(i)).transpose();
        const auto pr = classify::predict_features(model_, x);
        batch->rows.push_back({fm.marker_t[i], pr.class_id, pr.scores, fm.labels[i]});
      }
    } else {
      const auto& set = *std::get<std::shared_ptr<const EpochSet>>(p);
      for (const auto& e : set.epochs) {
        const auto pr = classify::predict_epoch(model_, e.data);
        batch->rows.push_back({e.marker_t, pr.class_id, pr.scores, e.class_id});
      }
    }
    count_ += batch->rows.size();
    if (!batch->rows.empty()) out.emit(0, std::shared_ptr<const LabelBatch>(std::move(batch)));
  }
  nlohmann::json result() const override {
    return {{"model", classify::to_string(model_.kind)}, {"predictions", count_}};
  }

 private:
  classify::ClassifierModel model_;
  std::size_t count_ = 0;
};

class TrainNode : public Node {
 public:
  TrainNode(NodeContext c, ModelKind kind) : Node(std::move(c)), kind_(kind) {}
  void on_input(std::size_t, const Packet& p, Outbox&) override {
    if (kind_ == ModelKind::nb) {
      features_.vappend(*std::get<std::shared_ptr<const features::FeatureMatrix>>(p));
    } else {
      const auto& set = *std::get<std::shared_ptr<const EpochSet>>(p);
      if (epochs_.epochs.empty()) epochs_ = set;
      else epochs_.epochs.insert(epochs_.epochs.end(), set.epochs.begin(), set.epochs.end());
    }
  }
  void on_end(Outbox& out) override {
    classify::Hyperparams h;
    h.seed = ctx_.seed;
    if (ctx_.params.contains("shrinkage")) h.shrinkage = param("shrinkage").get<double>();
    if (ctx_.params.contains("variance_floor")) h.variance_floor = param("variance_floor").get<double>();
    if (ctx_.params.contains("l2")) h.l2 = param("l2").get<double>();
    if (ctx_.params.contains("steps")) h.steps = param("steps").get<int>();
    if (ctx_.params.contains("learning_rate")) h.learning_rate = param("learning_rate").get<double>();

    classify::TrainingData data;
    std::vector<int> labels;
    if (kind_ == ModelKind::nb) {
      if (features_.rows() == 0) fail(ctx_.kind + ": no training rows");
      data.features = features_.values;
      labels = features_.label_vector();
    } else {
      if (epochs_.epochs.empty()) fail(ctx_.kind + ": no training epochs");
      data = classify::covariances_from_epochs(epochs_, h.shrinkage);
      labels = epochs_.labels();
    }
    report_ = {{"kind", classify::to_string(kind_)}, {"n_train", labels.size()}};
    const auto folds = param("folds").get<std::size_t>();
    if (folds >= 2) {
      const auto cv = classify::cross_validate(kind_, data, labels, folds, h);
      auto fj = nlohmann::json::array();
      for (const auto& f : cv.folds) fj.push_back({{"accuracy", f.accuracy}, {"mcc", f.mcc}, {"n_test", f.test.size()}});
      report_["cv"] = {{"folds", fj}, {"mean_accuracy", cv.mean_accuracy}, {"mean_mcc", cv.mean_mcc}};
    }
    auto packet = std::make_shared<ModelPacket>();
    packet->model = classify::train(kind_, data, labels, h);
    packet->report = report_;
    out.emit(0, std::shared_ptr<const ModelPacket>(std::move(packet)));
  }
  nlohmann::json result() const override { return report_; }

 private:
  ModelKind kind_;
  features::FeatureMatrix features_;
  EpochSet epochs_;
  nlohmann::json report_;
};

std::vector<ParamDecl> model_params() {
  return {param("model", ParamType::string, "", "model JSON path"),
          param("model_json", ParamType::object, nlohmann::json::object(), "inline model document")};
}

}  // namespace

void register_classify_nodes(std::vector<NodeEntry>& out) {
  const std::vector<PortDecl> labels_out{{"out", PortType::labels}};
  const std::vector<PortDecl> model_out{{"out", PortType::model}};
  const std::vector<PortDecl> f_in{{"in", PortType::features}};
  const std::vector<PortDecl> ep_in{{"in", PortType::epochs}};
  auto folds = integer_param("folds", 5, "cross-validation folds (0 or 1: skip)", 0, 100);
  auto shrink = number_param("shrinkage", 0.1, "covariance shrinkage", 0.0, 1.0);

  out.push_back({{"classify.nb", NodeRole::transform, "Gaussian naive Bayes on feature rows", f_in, labels_out,
                  model_params()},
                 [](NodeContext c) { return std::make_unique<ClassifyNode>(std::move(c), ModelKind::nb); }});
  out.push_back({{"classify.rmdm", NodeRole::transform, "Riemannian minimum distance to mean on epoch covariances",
                  ep_in, labels_out, model_params()},
                 [](NodeContext c) { return std::make_unique<ClassifyNode>(std::move(c), ModelKind::rmdm); }});
  out.push_back({{"classify.tangent", NodeRole::transform, "Tangent-space projection with a linear classifier",
                  ep_in, labels_out, model_params()},
                 [](NodeContext c) { return std::make_unique<ClassifyNode>(std::move(c), ModelKind::tangent_linear); }});
  out.push_back({{"train.nb", NodeRole::sink, "Fits naive Bayes on labelled feature rows with cross-validation", f_in,
                  model_out, {folds, number_param("variance_floor", 1e-9, "variance floor", 0.0)}, false},
                 [](NodeContext c) { return std::make_unique<TrainNode>(std::move(c), ModelKind::nb); }});
  out.push_back({{"train.rmdm", NodeRole::sink, "Fits class Riemannian means with cross-validation", ep_in, model_out,
                  {folds, shrink}, false},
                 [](NodeContext c) { return std::make_unique<TrainNode>(std::move(c), ModelKind::rmdm); }});
  out.push_back({{"train.tangent", NodeRole::sink, "Fits a tangent-space logistic model with cross-validation", ep_in,
                  model_out,
                  {folds, shrink, number_param("l2", 1e-3, "L2 penalty", 0.0),
                   integer_param("steps", 500, "gradient steps", 1, 100000),
                   number_param("learning_rate", 0.1, "step size", 0.0)},
                  false},
                 [](NodeContext c) { return std::make_unique<TrainNode>(std::move(c), ModelKind::tangent_linear); }});
}

}  // namespace noetic::flow
