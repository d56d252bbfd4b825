#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "refform/boosted_trees.hpp"
#include "refform/classifiers/crf.hpp"
#include "refform/classifiers/decision_tree.hpp"
#include "refform/classifiers/knn.hpp"
#include "refform/classifiers/maxent.hpp"
#include "refform/classifiers/mlp.hpp"
#include "refform/error.hpp"
#include "refform/features.hpp"
#include "refform/prediction.hpp"

namespace refform {

enum class Algorithm { Knn, Tree, MaxEnt, Mlp, Crf, Gbt };

inline constexpr std::array<Algorithm, 6> kAlgorithms = {Algorithm::Knn, Algorithm::Tree, Algorithm::MaxEnt,
                                                         Algorithm::Mlp, Algorithm::Crf,  Algorithm::Gbt};

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Knn: return "knn";
    case Algorithm::Tree: return "tree";
    case Algorithm::MaxEnt: return "maxent";
    case Algorithm::Mlp: return "mlp";
    case Algorithm::Crf: return "crf";
    case Algorithm::Gbt: return "gbt";
  }
  return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
  for (auto a : kAlgorithms)
    if (to_string(a) == s) return a;
  fail("unknown algorithm '" + s + "' (expected knn, tree, maxent, mlp, crf or gbt)");
}

// The learner each reconstructed system used.
inline std::optional<Algorithm> default_algorithm(const std::string& system_name) {
  static const std::map<std::string, Algorithm> table = {{"udel", Algorithm::Tree},   {"icsi", Algorithm::Crf},
                                                         {"cnts", Algorithm::Knn},    {"osu", Algorithm::MaxEnt},
                                                         {"isg", Algorithm::Mlp},     {"gbt", Algorithm::Gbt}};
  auto it = table.find(system_name);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// Hyperparameters, read from a flat JSON object for the chosen algorithm.

struct Hyperparams {
  knn::Params knn;
  tree::Params tree;
  maxent::Params maxent;
  mlp::Params mlp;
  crf::Params crf;
  gbt::Params gbt;
};

namespace detail {

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& out, std::set<std::string>& used) {
  used.insert(key);
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(std::string("hyperparameter '") + key + "' has the wrong type");
  }
}

}  // namespace detail

inline Hyperparams parse_hyperparams(Algorithm a, const nlohmann::json& j, std::uint64_t seed) {
  require(j.is_object() || j.is_null(), "hyperparameters must be a JSON object");
  Hyperparams hp;
  hp.mlp.seed = hp.crf.seed = hp.gbt.seed = seed;
  if (j.is_null()) return hp;
  std::set<std::string> used;
  switch (a) {
    case Algorithm::Knn: detail::read_key(j, "k", hp.knn.k, used); break;
    case Algorithm::Tree:
      detail::read_key(j, "trials", hp.tree.trials, used);
      detail::read_key(j, "min_leaf", hp.tree.min_leaf, used);
      detail::read_key(j, "max_depth", hp.tree.max_depth, used);
      break;
    case Algorithm::MaxEnt:
      detail::read_key(j, "lr", hp.maxent.lr, used);
      detail::read_key(j, "epochs", hp.maxent.epochs, used);
      detail::read_key(j, "l2", hp.maxent.l2, used);
      break;
    case Algorithm::Mlp:
      detail::read_key(j, "hidden", hp.mlp.hidden, used);
      detail::read_key(j, "epochs", hp.mlp.epochs, used);
      detail::read_key(j, "batch", hp.mlp.batch, used);
      detail::read_key(j, "lr", hp.mlp.lr, used);
      break;
    case Algorithm::Crf: {
      detail::read_key(j, "iterations", hp.crf.iterations, used);
      detail::read_key(j, "lr", hp.crf.lr, used);
      detail::read_key(j, "l2", hp.crf.l2, used);
      detail::read_key(j, "decay", hp.crf.decay, used);
      std::string decoding = "posterior";
      detail::read_key(j, "decoding", decoding, used);
      hp.crf.decoding = crf::parse_decoding(decoding);
      break;
    }
    case Algorithm::Gbt:
      detail::read_key(j, "learning_rate", hp.gbt.learning_rate, used);
      detail::read_key(j, "min_split_loss", hp.gbt.min_split_loss, used);
      detail::read_key(j, "max_depth", hp.gbt.max_depth, used);
      detail::read_key(j, "subsample", hp.gbt.subsample, used);
      detail::read_key(j, "n_rounds", hp.gbt.n_rounds, used);
      detail::read_key(j, "lambda", hp.gbt.lambda, used);
      detail::read_key(j, "min_child_weight", hp.gbt.min_child_weight, used);
      break;
  }
  for (const auto& [k, v] : j.items())
    require(used.count(k) > 0, "unknown hyperparameter '" + k + "' for " + to_string(a));
  return hp;
}

inline nlohmann::ordered_json hyperparams_to_json(Algorithm a, const Hyperparams& hp) {
  switch (a) {
    case Algorithm::Knn: return {{"k", hp.knn.k}};
    case Algorithm::Tree:
      return {{"trials", hp.tree.trials}, {"min_leaf", hp.tree.min_leaf}, {"max_depth", hp.tree.max_depth}};
    case Algorithm::MaxEnt: return {{"lr", hp.maxent.lr}, {"epochs", hp.maxent.epochs}, {"l2", hp.maxent.l2}};
    case Algorithm::Mlp:
      return {{"hidden", hp.mlp.hidden}, {"epochs", hp.mlp.epochs}, {"batch", hp.mlp.batch}, {"lr", hp.mlp.lr}};
    case Algorithm::Crf:
      return {{"iterations", hp.crf.iterations},
              {"lr", hp.crf.lr},
              {"l2", hp.crf.l2},
              {"decay", hp.crf.decay},
              {"decoding", hp.crf.decoding == crf::Decoding::Posterior ? "posterior" : "viterbi"}};
    case Algorithm::Gbt:
      return {{"learning_rate", hp.gbt.learning_rate}, {"min_split_loss", hp.gbt.min_split_loss},
              {"max_depth", hp.gbt.max_depth},         {"subsample", hp.gbt.subsample},
              {"n_rounds", hp.gbt.n_rounds},           {"lambda", hp.gbt.lambda},
              {"min_child_weight", hp.gbt.min_child_weight}};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Trained model

using ModelParams = std::variant<knn::Model, tree::Model, maxent::Model, mlp::Model, crf::Model, gbt::Model>;

struct TrainedModel {
  Algorithm algorithm = Algorithm::Knn;
  FeatureConfig config;
  ColumnMap columns;
  std::uint64_t seed = 0;
  Hyperparams hyperparams;
  ModelParams params;
};

inline TrainedModel train_model(const FeatureTable& table, Algorithm algorithm, const Hyperparams& hp,
                                const FeatureConfig& config, std::uint64_t seed) {
  const EncodedTable data = encode(table);
  TrainedModel m{algorithm, config, data.columns, seed, hp, {}};
  switch (algorithm) {
    case Algorithm::Knn: m.params = knn::train(data, hp.knn); break;
    case Algorithm::Tree: m.params = tree::train(data, hp.tree); break;
    case Algorithm::MaxEnt: m.params = maxent::train(data, hp.maxent); break;
    case Algorithm::Mlp: m.params = mlp::train(data, hp.mlp); break;
    case Algorithm::Crf: m.params = crf::train(data, crf::table_sequences(table), hp.crf); break;
    case Algorithm::Gbt: m.params = gbt::train(data, hp.gbt); break;
  }
  return m;
}

// Encodes without requiring labels or a non-empty table.
inline Matrix encode_features(const FeatureTable& table) {
  Matrix x(table.rows.size(), column_map(table.specs).size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) encode_row(table.specs, table.rows[r].values, x.row(r));
  return x;
}

inline std::vector<Prediction> predict(const TrainedModel& m, const FeatureTable& table) {
  require(column_map(table.specs) == m.columns,
          "feature table columns do not match the model's column map (was it trained with a different config?)");
  const Matrix x = encode_features(table);
  std::vector<Probs> probs(table.rows.size());
  if (const auto* crf_model = std::get_if<crf::Model>(&m.params)) {
    for (const auto& seq : crf::table_sequences(table)) {
      const auto seq_probs = crf::predict_sequence(*crf_model, x, seq);
      for (std::size_t t = 0; t < seq.size(); ++t) probs[seq[t]] = seq_probs[t];
    }
  } else {
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      probs[r] = std::visit(
          [&](const auto& model) -> Probs {
            using T = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<T, knn::Model>) return knn::predict_row(model, x.row(r));
            else if constexpr (std::is_same_v<T, tree::Model>) return tree::predict_row(model, x.row(r));
            else if constexpr (std::is_same_v<T, maxent::Model>) return maxent::predict_row(model, x.row(r));
            else if constexpr (std::is_same_v<T, mlp::Model>) return mlp::predict_row(model, x.row(r));
            else if constexpr (std::is_same_v<T, gbt::Model>) return gbt::predict_row(model, x.row(r));
            else return Probs{};
          },
          m.params);
    }
  }
  std::vector<Prediction> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r)
    out.push_back(make_prediction(table.rows[r].doc_id, table.rows[r].mention_id, probs[r]));
  return out;
}

// ---------------------------------------------------------------------------
// Versioned JSON model file

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::ordered_json config_to_json(const FeatureConfig& c) {
  return {{"system_name", c.system_name},
          {"features", c.features},
          {"subsequent_only", c.subsequent_only},
          {"clamps", c.clamps},
          {"sem_categories", c.sem_categories}};
}

inline FeatureConfig config_from_json(const nlohmann::json& j) {
  FeatureConfig c;
  c.system_name = j.at("system_name").get<std::string>();
  c.features = j.at("features").get<std::vector<std::string>>();
  c.subsequent_only = j.at("subsequent_only").get<bool>();
  c.clamps = j.at("clamps").get<std::map<std::string, int>>();
  c.sem_categories = j.at("sem_categories").get<std::vector<std::string>>();
  select_features(c);
  return c;
}

inline nlohmann::ordered_json model_to_json(const TrainedModel& m) {
  nlohmann::ordered_json j;
  j["format"] = "refform-model";
  j["version"] = kModelFormatVersion;
  j["algorithm"] = to_string(m.algorithm);
  j["seed"] = m.seed;
  j["hyperparams"] = hyperparams_to_json(m.algorithm, m.hyperparams);
  j["feature_config"] = config_to_json(m.config);
  j["columns"] = m.columns.columns;
  j["params"] = std::visit(
      [](const auto& model) -> nlohmann::json {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, knn::Model>) return knn::to_json(model);
        else if constexpr (std::is_same_v<T, tree::Model>) return tree::to_json(model);
        else if constexpr (std::is_same_v<T, maxent::Model>) return maxent::to_json(model);
        else if constexpr (std::is_same_v<T, mlp::Model>) return mlp::to_json(model);
        else if constexpr (std::is_same_v<T, crf::Model>) return crf::to_json(model);
        else return gbt::to_json(model);
      },
      m.params);
  return j;
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
  try {
    require(j.at("format").get<std::string>() == "refform-model", "not a refform model file");
    const int version = j.at("version").get<int>();
    require(version == kModelFormatVersion, "unsupported model format version " + std::to_string(version));
    TrainedModel m;
    m.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    m.seed = j.at("seed").get<std::uint64_t>();
    m.hyperparams = parse_hyperparams(m.algorithm, j.at("hyperparams"), m.seed);
    m.config = config_from_json(j.at("feature_config"));
    m.columns = column_map(select_features(m.config));
    require(m.columns.columns == j.at("columns").get<std::vector<std::string>>(),
            "model column map does not match its feature config");
    const auto& p = j.at("params");
    switch (m.algorithm) {
      case Algorithm::Knn: m.params = knn::from_json(p); break;
      case Algorithm::Tree: m.params = tree::from_json(p); break;
      case Algorithm::MaxEnt: m.params = maxent::from_json(p); break;
      case Algorithm::Mlp: m.params = mlp::from_json(p); break;
      case Algorithm::Crf: m.params = crf::from_json(p); break;
      case Algorithm::Gbt: m.params = gbt::from_json(p); break;
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("malformed model file: ") + e.what());
  }
}

}  // namespace refform
