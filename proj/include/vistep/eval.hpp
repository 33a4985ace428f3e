#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vistep/backend.hpp"
#include "vistep/fake_backend.hpp"
#include "vistep/generator.hpp"
#include "vistep/interpreter.hpp"

namespace vistep::eval {

enum class Task { Qa, PairQa, Tagging, Editing };

std::string_view to_string(Task t);
std::optional<Task> task_from_string(std::string_view name);

/// Program input names for a task: IMAGE, or LEFT and RIGHT for pairqa.
std::vector<std::string> input_names(Task t);

struct GoldObject {
  Box box;
  std::string tag;
};

struct EvalRecord {
  std::string id;
  Task task = Task::Qa;
  std::vector<Image> images;
  std::string instruction;
  std::optional<std::string> answer;  // qa, pairqa
  std::vector<GoldObject> objects;    // tagging
  std::string question_type;          // optional stratum for sampling
};

struct Dataset {
  Task task = Task::Qa;
  std::vector<EvalRecord> records;
};

/// Receives scenes declared inline in a dataset; returns the image to use.
using SceneHandler = std::function<Image(const backend::Scene&)>;

/// Schema:
///   {"task": "qa|pairqa|tagging|editing",
///    "records": [{"id", "instruction", "images": [{"path"} | {"scene"}],
///                 "answer"?, "objects"?: [{"box":[x1,y1,x2,y2], "tag"}],
///                 "question_type"?}]}
/// Paths are relative to `base_dir`. Throws InvalidDocument.
Dataset dataset_from_json(const nlohmann::json& j, const std::string& base_dir, const SceneHandler& scenes);
Dataset load_dataset(const std::string& path, const SceneHandler& scenes);

struct MatchedPair {
  std::size_t pred = 0;
  std::size_t gold = 0;
  double iou = 0;
};

enum class MatchMode { Localization, Tagging };

struct MatchResult {
  std::vector<MatchedPair> pairs;
  double precision = 0;
  double recall = 0;
};

/// Greedy one-to-one matching over pairs with IoU >= threshold, highest IoU
/// first (ties: lower pred index, then lower gold index). Tagging mode also
/// requires equal tags after lowercase+trim. With no predictions precision is
/// 1 when gold is empty too, else 0; with no gold, recall is 1.
MatchResult match_tagging(const ObjectList& preds, const std::vector<GoldObject>& gold, double threshold = 0.5,
                          MatchMode mode = MatchMode::Tagging);

struct F1 {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

/// Unweighted means of per-record precision and recall, then their harmonic
/// mean. Throws EmptySet.
F1 aggregate_f1(const std::vector<std::pair<double, double>>& per_record);
F1 f1_of(double avg_precision, double avg_recall);

/// Exact match after lowercase+trim; nullopt predictions count as wrong.
/// Throws LengthMismatch, EmptySet.
double accuracy(const std::vector<std::optional<std::string>>& preds, const std::vector<std::string>& gold);

/// Up to `per_type` records from each question_type, chosen with a seeded
/// sample, returned in dataset order.
std::vector<std::size_t> stratified_sample(const Dataset& dataset, std::size_t per_type, std::uint64_t seed);

/// Answer text of a result value for accuracy and voting.
std::string answer_text(const Value& v);

/// Regions passed to the last TAG step: the tagged ones, or all of them when
/// none carries a tag. nullopt when the run has no TAG step.
std::optional<ObjectList> tagging_predictions(const RunRecord& run);

struct EvalConfig {
  gen::PromptSpec prompt;  // strategy, k, runs, pool
  std::uint64_t seed = 0;
  double iou_threshold = 0.5;
  std::string out_dir;  // empty: nothing written
  int jobs = 1;
  ExecuteOptions execute;
};

/// Seed of run `run` for record `index`.
std::uint64_t run_seed(std::uint64_t seed, std::size_t index, int run);

/// Per record: generate (once, or `runs` times for voting), execute, score.
/// Record failures become failed rows, never abort the batch. Rows follow
/// dataset order. With an out_dir, writes report.json, rationales/<id>.html
/// (voting runs after the first: <id>.run<N>.html), runs/<id>.json and
/// images/; editing outputs go to outputs/<id>.png with a null "judgment"
/// column for manual scoring.
nlohmann::json run_eval(const Dataset& dataset, const EvalConfig& config, gen::CompletionClient& client,
                        backend::Backend& backend, const Registry& registry);

}  // namespace vistep::eval
