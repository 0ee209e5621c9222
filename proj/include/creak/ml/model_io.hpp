#pragma once

// JSON persistence for trained models. Files carry a format tag and version;
// loading any other version fails.

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "creak/error.hpp"
#include "creak/ml/classifier.hpp"

namespace creak::ml {

using json = nlohmann::json;

inline constexpr char kModelFormat[] = "creak-model";
inline constexpr int kModelVersion = 1;

inline void to_json(json& j, const ClassifierSpec& s) {
  j = json{{"kind", to_string(s.kind)},
           {"c", s.c},
           {"gamma", s.gamma},
           {"n_estimators", s.n_estimators},
           {"max_depth", s.max_depth},
           {"learning_rate", s.learning_rate},
           {"hidden", s.hidden},
           {"alpha", s.alpha},
           {"seed", s.seed}};
}

// Missing hyperparameters fall back to the kind's defaults.
inline void from_json(const json& j, ClassifierSpec& s) {
  s = default_spec(classifier_kind_from_string(j.at("kind").get<std::string>()));
  s.c = j.value("c", s.c);
  s.gamma = j.value("gamma", s.gamma);
  s.n_estimators = j.value("n_estimators", s.n_estimators);
  s.max_depth = j.value("max_depth", s.max_depth);
  s.learning_rate = j.value("learning_rate", s.learning_rate);
  s.hidden = j.value("hidden", s.hidden);
  s.alpha = j.value("alpha", s.alpha);
  s.seed = j.value("seed", s.seed);
}

namespace io_detail {

inline json matrix_json(const Matrix& m) { return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}}; }

inline Matrix matrix_from(const json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  m.data() = j.at("data").get<std::vector<double>>();
  if (m.data().size() != m.rows() * m.cols()) throw IoError("model file: matrix size mismatch");
  return m;
}

inline json tree_json(const DecisionTree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes())
    nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, static_cast<int>(n.label), n.n_low, n.n_high}));
  return json{{"n_features", t.n_features()}, {"nodes", nodes}};
}

inline DecisionTree tree_from(const json& j) {
  std::vector<TreeNode> nodes;
  for (const auto& a : j.at("nodes")) {
    TreeNode n;
    n.feature = a.at(0).get<int>();
    n.threshold = a.at(1).get<double>();
    n.left = a.at(2).get<int>();
    n.right = a.at(3).get<int>();
    n.label = static_cast<CreakLabel>(a.at(4).get<int>());
    n.n_low = a.at(5).get<std::uint32_t>();
    n.n_high = a.at(6).get<std::uint32_t>();
    nodes.push_back(n);
  }
  return DecisionTree(std::move(nodes), j.at("n_features").get<std::size_t>());
}

inline json eigen_json(const Eigen::MatrixXd& m) {
  std::vector<double> data(m.data(), m.data() + m.size());
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};  // column-major
}

inline Eigen::MatrixXd eigen_from(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw IoError("model file: matrix size mismatch");
  return Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
}

struct ClassifierWriter {
  json operator()(const SvmModel& m) const {
    return json{{"type", "svm"},
                {"kernel", m.kernel.type == KernelType::Linear ? "linear" : "rbf"},
                {"gamma", m.kernel.gamma},
                {"support_vectors", matrix_json(m.support_vectors)},
                {"coef", m.coef},
                {"rho", m.rho},
                {"weights", m.weights},
                {"converged", m.converged}};
  }
  json operator()(const LogisticModel& m) const {
    return json{{"type", "logistic"}, {"weights", m.weights}, {"intercept", m.intercept}, {"converged", m.converged}};
  }
  json operator()(const DecisionTree& t) const {
    json j = tree_json(t);
    j["type"] = "tree";
    return j;
  }
  json operator()(const RandomForest& f) const {
    json trees = json::array();
    for (const auto& t : f.trees()) trees.push_back(tree_json(t));
    return json{{"type", "forest"}, {"trees", trees}};
  }
  json operator()(const AdaBoost& a) const {
    json stumps = json::array();
    for (const auto& s : a.stumps())
      stumps.push_back(json::array({s.feature, s.threshold, static_cast<int>(s.left), static_cast<int>(s.right)}));
    return json{{"type", "adaboost"}, {"n_features", a.n_features()}, {"stumps", stumps}, {"alphas", a.alphas()}};
  }
  json operator()(const Mlp& m) const {
    return json{{"type", "mlp"},
                {"w1", eigen_json(m.w1())},
                {"b1", eigen_json(m.b1())},
                {"w2", eigen_json(m.w2())},
                {"b2", m.b2()}};
  }
};

inline Classifier classifier_from(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "svm") {
    SvmModel m;
    m.kernel.type = j.at("kernel").get<std::string>() == "linear" ? KernelType::Linear : KernelType::Rbf;
    m.kernel.gamma = j.at("gamma").get<double>();
    m.support_vectors = matrix_from(j.at("support_vectors"));
    m.coef = j.at("coef").get<std::vector<double>>();
    m.rho = j.at("rho").get<double>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.converged = j.value("converged", true);
    return m;
  }
  if (type == "logistic") {
    LogisticModel m;
    m.weights = j.at("weights").get<std::vector<double>>();
    m.intercept = j.at("intercept").get<double>();
    m.converged = j.value("converged", true);
    return m;
  }
  if (type == "tree") return tree_from(j);
  if (type == "forest") {
    std::vector<DecisionTree> trees;
    for (const auto& t : j.at("trees")) trees.push_back(tree_from(t));
    return RandomForest(std::move(trees));
  }
  if (type == "adaboost") {
    std::vector<Stump> stumps;
    for (const auto& a : j.at("stumps"))
      stumps.push_back({a.at(0).get<std::size_t>(), a.at(1).get<double>(), static_cast<CreakLabel>(a.at(2).get<int>()),
                        static_cast<CreakLabel>(a.at(3).get<int>())});
    return AdaBoost(std::move(stumps), j.at("alphas").get<std::vector<double>>(), j.at("n_features").get<std::size_t>());
  }
  if (type == "mlp") {
    return Mlp(eigen_from(j.at("w1")), eigen_from(j.at("b1")), eigen_from(j.at("w2")), j.at("b2").get<double>());
  }
  throw IoError("model file: unknown classifier type '" + type + "'");
}

}  // namespace io_detail

inline json model_to_json(const TrainedModel& m) {
  return json{{"format", kModelFormat},
              {"version", kModelVersion},
              {"spec", m.spec},
              {"scaler", {{"mean", m.scaler.mean}, {"std", m.scaler.std}}},
              {"classifier", std::visit(io_detail::ClassifierWriter{}, m.classifier)}};
}

inline TrainedModel model_from_json(const json& j) {
  if (j.value("format", std::string{}) != kModelFormat) throw IoError("model file: missing or wrong format tag");
  const int version = j.value("version", -1);
  if (version != kModelVersion)
    throw IoError("model file: version " + std::to_string(version) + " is not supported (expected " +
                  std::to_string(kModelVersion) + ")");
  TrainedModel m;
  m.spec = j.at("spec").get<ClassifierSpec>();
  m.scaler.mean = j.at("scaler").at("mean").get<std::vector<double>>();
  m.scaler.std = j.at("scaler").at("std").get<std::vector<double>>();
  m.classifier = io_detail::classifier_from(j.at("classifier"));
  return m;
}

inline void save_model(const std::filesystem::path& path, const TrainedModel& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write model file: " + path.string());
  out << model_to_json(m).dump() << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

inline TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("model file " + path.string() + ": " + e.what());
  }
  try {
    return model_from_json(j);
  } catch (const json::exception& e) {
    throw IoError("model file " + path.string() + ": " + e.what());
  }
}

}  // namespace creak::ml
