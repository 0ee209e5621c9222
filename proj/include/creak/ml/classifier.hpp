#pragma once

// The seven classifiers behind one train/predict interface.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include "creak/ml/adaboost.hpp"
#include "creak/ml/dataset.hpp"
#include "creak/ml/forest.hpp"
#include "creak/ml/logistic.hpp"
#include "creak/ml/mlp.hpp"
#include "creak/ml/scaler.hpp"
#include "creak/ml/svm.hpp"
#include "creak/ml/tree.hpp"

namespace creak::ml {

enum class ClassifierKind { SvmLinear, SvmRbf, RandomForest, Mlp, LogisticRegression, DecisionTree, AdaBoost };

// Row order of the accuracy report.
inline constexpr std::array<ClassifierKind, 7> kAllClassifierKinds{
    ClassifierKind::SvmLinear,    ClassifierKind::SvmRbf,       ClassifierKind::LogisticRegression,
    ClassifierKind::AdaBoost,     ClassifierKind::RandomForest, ClassifierKind::DecisionTree,
    ClassifierKind::Mlp};

inline const char* to_string(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::SvmLinear: return "svm_linear";
    case ClassifierKind::SvmRbf: return "svm_rbf";
    case ClassifierKind::RandomForest: return "rf";
    case ClassifierKind::Mlp: return "mlp";
    case ClassifierKind::LogisticRegression: return "lr";
    case ClassifierKind::DecisionTree: return "dt";
    case ClassifierKind::AdaBoost: return "adaboost";
  }
  return "?";
}

inline const char* display_name(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::SvmLinear: return "SVM (linear)";
    case ClassifierKind::SvmRbf: return "SVM (RBF)";
    case ClassifierKind::RandomForest: return "RF";
    case ClassifierKind::Mlp: return "MLP";
    case ClassifierKind::LogisticRegression: return "LR";
    case ClassifierKind::DecisionTree: return "DT";
    case ClassifierKind::AdaBoost: return "Adaboost";
  }
  return "?";
}

inline ClassifierKind classifier_kind_from_string(std::string_view s) {
  for (ClassifierKind k : kAllClassifierKinds)
    if (s == to_string(k)) return k;
  throw InvalidInput("unknown classifier: " + std::string(s));
}

// Only the forest and the perceptron consume randomness.
inline bool uses_seed(ClassifierKind k) { return k == ClassifierKind::RandomForest || k == ClassifierKind::Mlp; }

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::DecisionTree;
  double c = 1.0;                  // SVMs, LR
  double gamma = 0.1;              // SVM (RBF)
  std::size_t n_estimators = 100;  // RF, AdaBoost
  std::size_t max_depth = 5;       // DT, RF; 0 = unbounded
  double learning_rate = 1.0;      // AdaBoost
  std::size_t hidden = 100;        // MLP
  double alpha = 0.01;             // MLP L2 strength
  std::uint64_t seed = 0;

  bool operator==(const ClassifierSpec&) const = default;
};

// Default hyperparameters per classifier.
inline ClassifierSpec default_spec(ClassifierKind k) {
  ClassifierSpec s;
  s.kind = k;
  s.max_depth = k == ClassifierKind::RandomForest ? 0 : 5;
  return s;
}

using Classifier = std::variant<SvmModel, LogisticModel, DecisionTree, RandomForest, AdaBoost, Mlp>;

struct TrainedModel {
  ZScoreScaler scaler;
  ClassifierSpec spec;
  Classifier classifier;

  std::size_t dim() const { return scaler.dim(); }
};

// Trains on features the caller has already standardized.
inline Classifier train_classifier(const ClassifierSpec& spec, const Dataset& scaled) {
  switch (spec.kind) {
    case ClassifierKind::SvmLinear:
      return train_svm(scaled, SvmParams{spec.c, Kernel{KernelType::Linear, spec.gamma}});
    case ClassifierKind::SvmRbf:
      return train_svm(scaled, SvmParams{spec.c, Kernel{KernelType::Rbf, spec.gamma}});
    case ClassifierKind::LogisticRegression: {
      LogisticParams p;
      p.c = spec.c;
      return train_logistic(scaled, p);
    }
    case ClassifierKind::DecisionTree:
      return DecisionTree::fit(scaled, TreeParams{spec.max_depth, 0});
    case ClassifierKind::RandomForest:
      return RandomForest::fit(scaled, ForestParams{spec.n_estimators, spec.max_depth}, spec.seed);
    case ClassifierKind::AdaBoost:
      return AdaBoost::fit(scaled, AdaBoostParams{spec.n_estimators, spec.learning_rate});
    case ClassifierKind::Mlp: {
      MlpParams p;
      p.hidden = spec.hidden;
      p.alpha = spec.alpha;
      return Mlp::fit(scaled, p, spec.seed);
    }
  }
  throw InvalidInput("unknown classifier kind");
}

inline CreakLabel predict_scaled(const Classifier& c, std::span<const double> x) {
  return std::visit([&](const auto& m) { return m.predict(x); }, c);
}

// Fits the scaler on all of `data`, then the classifier on the scaled rows.
inline TrainedModel train(const ClassifierSpec& spec, const Dataset& data) {
  validate_training(data);
  TrainedModel model;
  model.spec = spec;
  model.scaler = fit_scaler(data.x);
  const Dataset scaled{model.scaler.transform(data.x), data.y};
  model.classifier = train_classifier(spec, scaled);
  return model;
}

// Takes raw (unscaled) features; the model applies its own scaler.
inline CreakLabel predict(const TrainedModel& model, std::span<const double> x) {
  check_dim(x, model.dim());
  return predict_scaled(model.classifier, model.scaler.transform(x));
}

}  // namespace creak::ml
