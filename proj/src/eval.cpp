#include "vistep/eval.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

#include "vistep/codec.hpp"
#include "vistep/error.hpp"
#include "vistep/rationale.hpp"

namespace vistep::eval {

namespace fs = std::filesystem;

namespace {

struct RunOutcome {
  std::uint64_t seed = 0;
  std::optional<gen::Generated> generated;
  std::optional<RunRecord> run;
  std::optional<nlohmann::json> error;
};

struct RowOutcome {
  nlohmann::json row;
  std::optional<std::string> prediction;    // qa, pairqa
  std::pair<double, double> localization;   // tagging
  std::pair<double, double> tagging;
};

nlohmann::json match_json(const MatchResult& m) {
  auto pairs = nlohmann::json::array();
  for (const auto& p : m.pairs) pairs.push_back({{"pred", p.pred}, {"gold", p.gold}, {"iou", p.iou}});
  return {{"precision", m.precision}, {"recall", m.recall}, {"matches", std::move(pairs)}};
}

nlohmann::json f1_json(const F1& f) { return {{"precision", f.precision}, {"recall", f.recall}, {"f1", f.f1}}; }

std::string file_stem(const std::string& id, int run) {
  std::string safe;
  for (char c : id) safe += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  return run == 0 ? safe : safe + ".run" + std::to_string(run);
}

}  // namespace

std::string_view to_string(Task t) {
  switch (t) {
    case Task::Qa: return "qa";
    case Task::PairQa: return "pairqa";
    case Task::Tagging: return "tagging";
    case Task::Editing: return "editing";
  }
  return "qa";
}

std::optional<Task> task_from_string(std::string_view name) {
  if (name == "qa") return Task::Qa;
  if (name == "pairqa") return Task::PairQa;
  if (name == "tagging") return Task::Tagging;
  if (name == "editing") return Task::Editing;
  return std::nullopt;
}

std::vector<std::string> input_names(Task t) {
  if (t == Task::PairQa) return {"LEFT", "RIGHT"};
  return {"IMAGE"};
}

Dataset dataset_from_json(const nlohmann::json& j, const std::string& base_dir, const SceneHandler& scenes) {
  Dataset ds;
  try {
    const auto task_name = j.at("task").get<std::string>();
    auto task = task_from_string(task_name);
    if (!task) throw Error(ErrorCode::InvalidDocument, "unknown task '" + task_name + "'", {{"task", task_name}});
    ds.task = *task;
    const std::size_t expected_images = ds.task == Task::PairQa ? 2 : 1;
    std::set<std::string> ids;
    for (const auto& rj : j.at("records")) {
      EvalRecord r;
      r.task = ds.task;
      r.id = rj.at("id").is_string() ? rj.at("id").get<std::string>() : rj.at("id").dump();
      if (!ids.insert(r.id).second) throw Error(ErrorCode::InvalidDocument, "duplicate record id " + r.id);
      r.instruction = rj.at("instruction").get<std::string>();
      r.question_type = rj.value("question_type", "");
      for (const auto& ij : rj.at("images")) {
        if (ij.contains("scene")) {
          const auto scene = backend::Scene::from_json(ij.at("scene"));
          r.images.push_back(scenes ? scenes(scene) : backend::render_scene(scene));
        } else {
          fs::path p = ij.at("path").get<std::string>();
          if (p.is_relative()) p = fs::path(base_dir) / p;
          r.images.push_back(codec::load_image(p.string()));
        }
      }
      if (r.images.size() != expected_images) {
        throw Error(ErrorCode::InvalidDocument,
                    "record " + r.id + " needs " + std::to_string(expected_images) + " image(s)", {{"id", r.id}});
      }
      if (rj.contains("answer") && !rj.at("answer").is_null()) {
        const auto& a = rj.at("answer");
        r.answer = a.is_string() ? a.get<std::string>() : a.dump();
      }
      if ((ds.task == Task::Qa || ds.task == Task::PairQa) && !r.answer) {
        throw Error(ErrorCode::InvalidDocument, "record " + r.id + " has no answer", {{"id", r.id}});
      }
      if (ds.task == Task::Tagging) {
        const auto& img = r.images.front();
        for (const auto& oj : rj.value("objects", nlohmann::json::array())) {
          GoldObject g{box_from_json(oj.at("box")), oj.at("tag").get<std::string>()};
          if (!g.box.is_valid() || g.box.x1 < 0 || g.box.y1 < 0 || g.box.x2 > img.width() || g.box.y2 > img.height()) {
            throw Error(ErrorCode::InvalidDocument, "record " + r.id + " has a gold box outside the image",
                        {{"id", r.id}});
          }
          r.objects.push_back(std::move(g));
        }
      }
      ds.records.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidDocument, std::string("malformed dataset: ") + e.what());
  }
  return ds;
}

Dataset load_dataset(const std::string& path, const SceneHandler& scenes) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open dataset " + path, {{"path", path}});
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidDocument, path + ": " + e.what(), {{"path", path}});
  }
  return dataset_from_json(j, fs::path(path).parent_path().string(), scenes);
}

MatchResult match_tagging(const ObjectList& preds, const std::vector<GoldObject>& gold, double threshold,
                          MatchMode mode) {
  struct Candidate {
    double iou;
    std::size_t p;
    std::size_t g;
  };
  std::vector<Candidate> cands;
  for (std::size_t p = 0; p < preds.size(); ++p) {
    for (std::size_t g = 0; g < gold.size(); ++g) {
      const double v = iou(preds[p].box, gold[g].box);
      if (v < threshold) continue;
      if (mode == MatchMode::Tagging) {
        const auto label = preds[p].label();
        if (!label || gen::normalize_answer(*label) != gen::normalize_answer(gold[g].tag)) continue;
      }
      cands.push_back({v, p, g});
    }
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.p != b.p) return a.p < b.p;
    return a.g < b.g;
  });
  std::vector<bool> used_p(preds.size(), false);
  std::vector<bool> used_g(gold.size(), false);
  MatchResult m;
  for (const auto& c : cands) {
    if (used_p[c.p] || used_g[c.g]) continue;
    used_p[c.p] = used_g[c.g] = true;
    m.pairs.push_back({c.p, c.g, c.iou});
  }
  const double n = static_cast<double>(m.pairs.size());
  m.precision = preds.empty() ? (gold.empty() ? 1.0 : 0.0) : n / static_cast<double>(preds.size());
  m.recall = gold.empty() ? 1.0 : n / static_cast<double>(gold.size());
  return m;
}

F1 f1_of(double p, double r) {
  return {p, r, (p + r) > 0 ? 2.0 * p * r / (p + r) : 0.0};
}

F1 aggregate_f1(const std::vector<std::pair<double, double>>& per_record) {
  if (per_record.empty()) throw Error(ErrorCode::EmptySet, "no records to aggregate");
  double p = 0;
  double r = 0;
  for (const auto& [pp, rr] : per_record) {
    p += pp;
    r += rr;
  }
  const double n = static_cast<double>(per_record.size());
  return f1_of(p / n, r / n);
}

double accuracy(const std::vector<std::optional<std::string>>& preds, const std::vector<std::string>& gold) {
  if (preds.size() != gold.size()) {
    throw Error(ErrorCode::LengthMismatch, "predictions and gold answers differ in length",
                {{"predictions", preds.size()}, {"gold", gold.size()}});
  }
  if (gold.empty()) throw Error(ErrorCode::EmptySet, "no records to score");
  std::size_t ok = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (preds[i] && gen::normalize_answer(*preds[i]) == gen::normalize_answer(gold[i])) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(gold.size());
}

std::vector<std::size_t> stratified_sample(const Dataset& dataset, std::size_t per_type, std::uint64_t seed) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const auto& t = dataset.records[i].question_type;
    if (!groups.contains(t)) order.push_back(t);
    groups[t].push_back(i);
  }
  std::vector<std::size_t> out;
  for (std::size_t g = 0; g < order.size(); ++g) {
    const auto& members = groups[order[g]];
    for (auto pick : gen::sample_indices(members.size(), per_type, seed + g)) out.push_back(members[pick]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string answer_text(const Value& v) { return v.summary(); }

std::optional<ObjectList> tagging_predictions(const RunRecord& run) {
  for (auto it = run.traces.rbegin(); it != run.traces.rend(); ++it) {
    dsl::ProgramStep step;
    try {
      step = dsl::parse_step(it->text);
    } catch (const Error&) {
      continue;
    }
    if (upper_case(step.module) != "TAG") continue;
    for (const auto& [name, v] : it->args) {
      if (name != "object" || !v.is(ValueKind::ObjectList)) continue;
      const auto& objs = v.as_objects();
      ObjectList tagged;
      for (const auto& o : objs) {
        if (o.tag) tagged.push_back(o);
      }
      return tagged.empty() ? objs : tagged;
    }
  }
  return std::nullopt;
}

std::uint64_t run_seed(std::uint64_t seed, std::size_t index, int run) {
  return seed + static_cast<std::uint64_t>(index) * 1000003ULL + static_cast<std::uint64_t>(run);
}

nlohmann::json run_eval(const Dataset& dataset, const EvalConfig& config, gen::CompletionClient& client,
                        backend::Backend& backend, const Registry& registry) {
  const bool voting = config.prompt.strategy == gen::Strategy::Voting;
  const int runs = voting ? std::max(1, config.prompt.runs) : 1;
  const auto names = input_names(dataset.task);
  const std::set<std::string> name_set(names.begin(), names.end());

  std::optional<DirectoryImageStore> images;
  if (!config.out_dir.empty()) {
    for (const char* sub : {"rationales", "runs", "images", "outputs"}) fs::create_directories(fs::path(config.out_dir) / sub);
    images.emplace((fs::path(config.out_dir) / "images").string());
  }
  rationale::Options ropts;
  ropts.registry = &registry;

  auto process = [&](std::size_t index) {
    const EvalRecord& rec = dataset.records[index];
    std::map<std::string, Value> inputs;
    for (std::size_t i = 0; i < names.size(); ++i) inputs.emplace(names[i], Value::image(rec.images[i]));

    std::vector<RunOutcome> outcomes;
    for (int r = 0; r < runs; ++r) {
      RunOutcome o;
      o.seed = run_seed(config.seed, index, r);
      try {
        o.generated = gen::generate_program(config.prompt, rec.instruction, client, o.seed, &registry, name_set);
        ExecuteOptions eo = config.execute;
        eo.run_id = derive_run_id(o.generated->program.source, inputs) + (r ? "-" + std::to_string(r) : "");
        o.run = execute(o.generated->program, inputs, registry, &backend, eo);
        if (!o.run->ok()) {
          const auto* f = o.run->failed_step();
          o.error = f && f->error ? *f->error : nlohmann::json{{"code", "EmptyProgram"}, {"message", "no steps"}};
        }
      } catch (const Error& e) {
        o.error = e.to_json();
      } catch (const std::exception& e) {
        o.error = nlohmann::json{{"code", "InternalError"}, {"message", e.what()}};
      }
      outcomes.push_back(std::move(o));
    }

    RowOutcome out;
    nlohmann::json row{{"id", rec.id}, {"instruction", rec.instruction}};
    auto runs_json = nlohmann::json::array();
    std::string rationale_path;
    for (std::size_t r = 0; r < outcomes.size(); ++r) {
      const auto& o = outcomes[r];
      nlohmann::json rj{{"seed", o.seed}};
      rj["program"] = o.generated ? nlohmann::json(o.generated->program.source) : nlohmann::json();
      rj["run_id"] = o.run ? nlohmann::json(o.run->run_id) : nlohmann::json();
      rj["status"] = (o.run && o.run->ok()) ? "ok" : "failed";
      rj["answer"] = (o.run && o.run->result) ? nlohmann::json(answer_text(*o.run->result)) : nlohmann::json();
      rj["error"] = o.error ? *o.error : nlohmann::json();
      if (o.run && images) {
        const auto stem = file_stem(rec.id, static_cast<int>(r));
        codec::write_file((fs::path(config.out_dir) / "runs" / (stem + ".json")).string(),
                          o.run->to_json(&*images).dump(2) + "\n");
        codec::write_file((fs::path(config.out_dir) / "rationales" / (stem + ".html")).string(),
                          rationale::render_html(*o.run, ropts));
        rj["rationale"] = "rationales/" + stem + ".html";
        if (rationale_path.empty()) rationale_path = rj["rationale"];
      }
      runs_json.push_back(std::move(rj));
    }
    row["runs"] = std::move(runs_json);
    row["rationale"] = rationale_path.empty() ? nlohmann::json() : nlohmann::json(rationale_path);

    const RunOutcome* first_ok = nullptr;
    for (const auto& o : outcomes) {
      if (o.run && o.run->ok()) {
        first_ok = &o;
        break;
      }
    }
    row["status"] = first_ok ? "ok" : "failed";
    row["error"] = first_ok ? nlohmann::json() : (outcomes.front().error ? *outcomes.front().error : nlohmann::json());

    switch (dataset.task) {
      case Task::Qa:
      case Task::PairQa: {
        std::vector<std::optional<std::string>> answers;
        for (const auto& o : outcomes) {
          answers.push_back((o.run && o.run->ok() && o.run->result) ? std::optional(answer_text(*o.run->result))
                                                                      : std::nullopt);
        }
        try {
          out.prediction = voting ? gen::vote(answers) : answers.front();
        } catch (const Error&) {
          out.prediction.reset();
        }
        row["prediction"] = out.prediction ? nlohmann::json(*out.prediction) : nlohmann::json();
        row["gold"] = *rec.answer;
        row["correct"] = out.prediction && gen::normalize_answer(*out.prediction) == gen::normalize_answer(*rec.answer);
        break;
      }
      case Task::Tagging: {
        ObjectList preds;
        if (first_ok) {
          if (auto p = tagging_predictions(*first_ok->run)) preds = *p;
        }
        const auto loc = match_tagging(preds, rec.objects, config.iou_threshold, MatchMode::Localization);
        const auto tag = match_tagging(preds, rec.objects, config.iou_threshold, MatchMode::Tagging);
        out.localization = {loc.precision, loc.recall};
        out.tagging = {tag.precision, tag.recall};
        auto pj = nlohmann::json::array();
        for (const auto& p : preds) pj.push_back({{"box", box_to_json(p.box)}, {"tag", p.label() ? *p.label() : ""}});
        row["prediction"] = std::move(pj);
        row["localization"] = match_json(loc);
        row["tagging"] = match_json(tag);
        break;
      }
      case Task::Editing: {
        nlohmann::json output;
        if (first_ok && first_ok->run->result && first_ok->run->result->is(ValueKind::Image)) {
          const Image& img = first_ok->run->result->as_image();
          output = img.id();
          if (images) {
            codec::save_png((fs::path(config.out_dir) / "outputs" / (file_stem(rec.id, 0) + ".png")).string(), img);
          }
        }
        row["prediction"] = output;
        row["judgment"] = nullptr;
        break;
      }
    }
    out.row = std::move(row);
    return out;
  };

  std::vector<RowOutcome> rows(dataset.records.size());
  const int jobs = std::max(1, std::min<int>(config.jobs, static_cast<int>(dataset.records.size())));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = process(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < rows.size(); i = next++) rows[i] = process(i);
      });
    }
    for (auto& t : workers) t.join();
  }

  nlohmann::json report{{"task", to_string(dataset.task)},
                        {"strategy", gen::to_string(config.prompt.strategy)},
                        {"k", config.prompt.k},
                        {"runs", runs},
                        {"seed", config.seed},
                        {"iou_threshold", config.iou_threshold}};
  auto rows_json = nlohmann::json::array();
  for (auto& r : rows) rows_json.push_back(r.row);
  report["records"] = std::move(rows_json);

  nlohmann::json agg{{"total", rows.size()}};
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.row.at("status") == "failed";
  agg["failed"] = failed;
  if (!rows.empty()) {
    switch (dataset.task) {
      case Task::Qa:
      case Task::PairQa: {
        std::vector<std::optional<std::string>> preds;
        std::vector<std::string> gold;
        for (std::size_t i = 0; i < rows.size(); ++i) {
          preds.push_back(rows[i].prediction);
          gold.push_back(*dataset.records[i].answer);
        }
        agg["accuracy"] = accuracy(preds, gold);
        agg["correct"] = static_cast<std::size_t>(std::count_if(
            rows.begin(), rows.end(), [](const RowOutcome& r) { return r.row.at("correct").get<bool>(); }));
        break;
      }
      case Task::Tagging: {
        std::vector<std::pair<double, double>> loc;
        std::vector<std::pair<double, double>> tag;
        for (const auto& r : rows) {
          loc.push_back(r.localization);
          tag.push_back(r.tagging);
        }
        agg["localization"] = f1_json(aggregate_f1(loc));
        agg["tagging"] = f1_json(aggregate_f1(tag));
        break;
      }
      case Task::Editing:
        agg["judged"] = 0;
        break;
    }
  }
  report["aggregate"] = std::move(agg);

  if (!config.out_dir.empty()) {
    codec::write_file((fs::path(config.out_dir) / "report.json").string(), report.dump(2) + "\n");
  }
  return report;
}

}  // namespace vistep::eval
