// vistep command line: parse, validate, run, generate, eval, serve.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "vistep/codec.hpp"
#include "vistep/error.hpp"
#include "vistep/eval.hpp"
#include "vistep/fake_backend.hpp"
#include "vistep/generator.hpp"
#include "vistep/http_backend.hpp"
#include "vistep/interpreter.hpp"
#include "vistep/modules.hpp"
#include "vistep/rationale.hpp"
#include "vistep/service.hpp"
#include "vistep/validate.hpp"

namespace fs = std::filesystem;
using namespace vistep;

namespace {

const char* kDefaultHeader =
    "Write a program of module calls, one per line, that carries out the instruction. "
    "Lists have at most {list_max} items unless the instruction says otherwise.";

std::string slurp(const std::string& path) {
  const auto bytes = codec::read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(slurp(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidDocument, path + ": " + e.what(), {{"path", path}});
  }
}

struct Backends {
  std::shared_ptr<backend::Backend> backend;
  std::shared_ptr<backend::ProceduralBackend> procedural;  // null for remote
};

// fixtures:F (fixtures, then procedural rules), procedural, remote:URL
Backends make_backend(const std::string& spec) {
  Backends b;
  if (spec == "procedural") {
    b.procedural = std::make_shared<backend::ProceduralBackend>();
    b.backend = b.procedural;
  } else if (spec.starts_with("fixtures:")) {
    auto fixtures = std::make_shared<backend::FixtureBackend>(backend::FixtureSet::load(spec.substr(9)));
    b.procedural = std::make_shared<backend::ProceduralBackend>();
    b.backend = std::make_shared<backend::ChainBackend>(
        std::vector<std::shared_ptr<backend::Backend>>{fixtures, b.procedural});
  } else if (spec.starts_with("remote:")) {
    b.backend = std::make_shared<backend::HttpBackend>(spec.substr(7));
  } else {
    throw Error(ErrorCode::InvalidArgument, "backend must be fixtures:FILE, procedural or remote:URL", {{"backend", spec}});
  }
  return b;
}

// replay:F, scripted:F, remote:URL
std::shared_ptr<gen::CompletionClient> make_client(const std::string& spec, const std::string& model) {
  if (spec.starts_with("replay:")) return std::make_shared<gen::ReplayClient>(gen::ReplayClient::load(spec.substr(7)));
  if (spec.starts_with("scripted:")) {
    return std::make_shared<gen::ScriptedClient>(gen::ScriptedClient::from_json(read_json(spec.substr(9))));
  }
  if (spec.starts_with("remote:")) {
    gen::RemoteConfig cfg;
    cfg.endpoint = spec.substr(7);
    cfg.model = model;
    return std::make_shared<gen::RemoteClient>(cfg);
  }
  throw Error(ErrorCode::InvalidArgument, "client must be replay:FILE, scripted:FILE or remote:URL", {{"client", spec}});
}

struct PromptOptions {
  std::string pool;
  std::string header_file;
  std::string strategy = "random";
  int k = 3;
  int runs = 5;
  std::vector<int> curated;
  int list_max = 20;

  void add_to(CLI::App* app, bool pool_required = true) {
    auto* p = app->add_option("--pool", pool, "in-context example pool (JSON)");
    if (pool_required) p->required();
    app->add_option("--header", header_file, "prompt header text file");
    app->add_option("--strategy", strategy, "random | curated | voting")->check(CLI::IsMember({"random", "curated", "voting"}));
    app->add_option("--k", k, "examples per prompt");
    app->add_option("--runs", runs, "runs per record for voting");
    app->add_option("--curated", curated, "example ids for the curated strategy")->delimiter(',');
    app->add_option("--list-max", list_max, "default LIST length");
  }

  gen::PromptSpec spec() const {
    gen::PromptSpec s;
    s.header = header_file.empty() ? kDefaultHeader : slurp(header_file);
    s.header_vars["list_max"] = std::to_string(list_max);
    s.pool = gen::load_pool(pool);
    s.k = k;
    s.strategy = *gen::strategy_from_string(strategy);
    s.curated_ids = curated;
    s.runs = runs;
    return s;
  }
};

// NAME=PATH pairs; PATH may be an image or a scene JSON file.
std::map<std::string, Value> load_inputs(const std::vector<std::string>& pairs, Backends& b) {
  std::map<std::string, Value> inputs;
  for (const auto& p : pairs) {
    const auto eq = p.find('=');
    const std::string name = eq == std::string::npos ? "IMAGE" : p.substr(0, eq);
    const std::string path = eq == std::string::npos ? p : p.substr(eq + 1);
    Image img = fs::path(path).extension() == ".json"
                    ? (b.procedural ? b.procedural->add_scene(backend::Scene::from_json(read_json(path)))
                                    : backend::render_scene(backend::Scene::from_json(read_json(path))))
                    : codec::load_image(path);
    inputs.emplace(name, Value::image(std::move(img)));
  }
  return inputs;
}

void print_error(const Error& e) {
  std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
  if (!e.detail().empty()) std::cerr << e.detail().dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vistep: visual programs from instructions"};
  app.require_subcommand(1);

  // parse
  std::string parse_file;
  bool parse_json = false;
  auto* parse_cmd = app.add_subcommand("parse", "parse a program and print its canonical form");
  parse_cmd->add_option("file", parse_file, "program file")->required();
  parse_cmd->add_flag("--json", parse_json, "print steps as JSON");

  // validate
  std::string validate_file;
  std::vector<std::string> validate_inputs{"IMAGE"};
  auto* validate_cmd = app.add_subcommand("validate", "check a program against the module registry");
  validate_cmd->add_option("file", validate_file, "program file")->required();
  validate_cmd->add_option("--inputs", validate_inputs, "input variable names")->delimiter(',');

  // run
  std::string run_file, run_backend = "procedural", run_rationale, run_record;
  std::vector<std::string> run_images;
  auto* run_cmd = app.add_subcommand("run", "execute a program");
  run_cmd->add_option("file", run_file, "program file")->required();
  run_cmd->add_option("--input", run_images, "NAME=PATH (image or scene .json); repeatable")->required();
  run_cmd->add_option("--backend", run_backend, "fixtures:FILE | procedural | remote:URL");
  run_cmd->add_option("--rationale", run_rationale, "write the rationale document here");
  run_cmd->add_option("--record", run_record, "write the run record JSON here (images beside it)");

  // generate
  PromptOptions gen_opts;
  std::string gen_instruction, gen_client, gen_model;
  std::uint64_t gen_seed = 0;
  bool gen_show_prompt = false;
  auto* gen_cmd = app.add_subcommand("generate", "generate a program for an instruction");
  gen_opts.add_to(gen_cmd);
  gen_cmd->add_option("--instruction", gen_instruction)->required();
  gen_cmd->add_option("--client", gen_client, "replay:FILE | scripted:FILE | remote:URL")->required();
  gen_cmd->add_option("--model", gen_model, "model name for remote clients");
  gen_cmd->add_option("--seed", gen_seed);
  gen_cmd->add_flag("--show-prompt", gen_show_prompt);

  // eval
  PromptOptions eval_opts;
  std::string eval_task, eval_dataset, eval_backend = "procedural", eval_out, eval_client, eval_model;
  std::uint64_t eval_seed = 0;
  int eval_jobs = 1;
  std::size_t eval_per_type = 0;
  double eval_threshold = 0.5;
  int eval_timeout = 30;
  auto* eval_cmd = app.add_subcommand("eval", "batch evaluation over a dataset");
  eval_opts.add_to(eval_cmd);
  eval_cmd->add_option("--task", eval_task, "qa | pairqa | tagging | editing")
      ->required()
      ->check(CLI::IsMember({"qa", "pairqa", "tagging", "editing"}));
  eval_cmd->add_option("--dataset", eval_dataset)->required();
  eval_cmd->add_option("--backend", eval_backend, "fixtures:FILE | procedural | remote:URL");
  eval_cmd->add_option("--client", eval_client, "replay:FILE | scripted:FILE | remote:URL")->required();
  eval_cmd->add_option("--model", eval_model);
  eval_cmd->add_option("--seed", eval_seed);
  eval_cmd->add_option("--out", eval_out)->required();
  eval_cmd->add_option("--jobs", eval_jobs, "records evaluated in parallel");
  eval_cmd->add_option("--per-type", eval_per_type, "sample up to N records per question type (0: all)");
  eval_cmd->add_option("--iou", eval_threshold, "IoU threshold for tagging");
  eval_cmd->add_option("--step-timeout", eval_timeout, "seconds per step");

  // serve
  std::string serve_host = "127.0.0.1", serve_store = "vistep.db", serve_images = "vistep-images",
              serve_backend = "procedural", serve_client, serve_model, serve_header;
  int serve_port = 8080, serve_k = 3, serve_list_max = 20;
  std::vector<std::string> serve_pools;
  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
  serve_cmd->add_option("--host", serve_host);
  serve_cmd->add_option("--port", serve_port);
  serve_cmd->add_option("--store", serve_store, "sqlite file");
  serve_cmd->add_option("--images", serve_images, "image directory");
  serve_cmd->add_option("--backend", serve_backend);
  serve_cmd->add_option("--client", serve_client)->required();
  serve_cmd->add_option("--model", serve_model);
  serve_cmd->add_option("--pool", serve_pools, "TASK=FILE; repeatable")->required();
  serve_cmd->add_option("--header", serve_header);
  serve_cmd->add_option("--k", serve_k);
  serve_cmd->add_option("--list-max", serve_list_max);

  // backend-serve
  std::string bs_host = "127.0.0.1", bs_backend = "procedural";
  int bs_port = 8090;
  std::vector<std::string> bs_scenes;
  auto* bs_cmd = app.add_subcommand("backend-serve", "serve a fake model backend over HTTP");
  bs_cmd->add_option("--host", bs_host);
  bs_cmd->add_option("--port", bs_port);
  bs_cmd->add_option("--backend", bs_backend, "fixtures:FILE | procedural");
  bs_cmd->add_option("--scene", bs_scenes, "scene JSON to register; repeatable");

  // hash
  std::string hash_file;
  auto* hash_cmd = app.add_subcommand("hash", "print the content id of an image");
  hash_cmd->add_option("file", hash_file)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*parse_cmd) {
      const auto program = dsl::parse_program(slurp(parse_file));
      if (parse_json) {
        auto arr = nlohmann::json::array();
        for (std::size_t i = 0; i < program.steps.size(); ++i) {
          const auto& s = program.steps[i];
          nlohmann::json args = nlohmann::json::array();
          for (const auto& a : s.args) args.push_back({{"name", a.name}, {"value", dsl::render_arg_value(a.value)}});
          arr.push_back({{"line", program.lines[i]}, {"output", s.output}, {"module", s.module}, {"args", args}});
        }
        std::cout << arr.dump(2) << "\n";
      } else {
        std::cout << dsl::render_program(program);
      }
      return 0;
    }

    if (*validate_cmd) {
      const auto program = dsl::parse_program(slurp(validate_file));
      const auto report = dsl::validate(program, standard_registry(),
                                        std::set<std::string>(validate_inputs.begin(), validate_inputs.end()));
      std::cout << report.to_json().dump(2) << "\n";
      return report.ok() ? 0 : 1;
    }

    if (*run_cmd) {
      auto b = make_backend(run_backend);
      const auto inputs = load_inputs(run_images, b);
      const auto registry = standard_registry();
      const auto program = dsl::parse_program(slurp(run_file));
      const auto run = execute(program, inputs, registry, b.backend.get());
      if (!run_record.empty()) {
        DirectoryImageStore store((fs::path(run_record).parent_path() / "images").string());
        codec::write_file(run_record, run.to_json(&store, true).dump(2) + "\n");
      }
      if (!run_rationale.empty()) {
        rationale::Options opts;
        opts.registry = &registry;
        codec::write_file(run_rationale, rationale::render_html(run, opts));
      }
      nlohmann::json summary{{"run_id", run.run_id}, {"status", run.ok() ? "ok" : "failed"}};
      summary["result"] = run.result ? nlohmann::json(run.result->summary()) : nlohmann::json();
      if (const auto* f = run.failed_step()) summary["error"] = *f->error, summary["failed_step"] = f->step;
      std::cout << summary.dump(2) << "\n";
      return run.ok() ? 0 : 1;
    }

    if (*gen_cmd) {
      auto client = make_client(gen_client, gen_model);
      const auto spec = gen_opts.spec();
      const auto g = gen::generate_program(spec, gen_instruction, *client, gen_seed);
      if (gen_show_prompt) std::cout << g.prompt << "\n---\n";
      std::cout << g.program.source;
      return 0;
    }

    if (*eval_cmd) {
      auto b = make_backend(eval_backend);
      eval::SceneHandler scenes;
      if (b.procedural) scenes = [p = b.procedural](const backend::Scene& s) { return p->add_scene(s); };
      auto dataset = eval::load_dataset(eval_dataset, scenes);
      if (dataset.task != *eval::task_from_string(eval_task)) {
        throw Error(ErrorCode::InvalidArgument, "dataset task is '" + std::string(eval::to_string(dataset.task)) +
                                                    "' but --task is '" + eval_task + "'");
      }
      if (eval_per_type > 0) {
        eval::Dataset subset{dataset.task, {}};
        for (auto i : eval::stratified_sample(dataset, eval_per_type, eval_seed)) subset.records.push_back(dataset.records[i]);
        dataset = std::move(subset);
      }
      auto client = make_client(eval_client, eval_model);
      eval::EvalConfig cfg;
      cfg.prompt = eval_opts.spec();
      cfg.seed = eval_seed;
      cfg.out_dir = eval_out;
      cfg.jobs = eval_jobs;
      cfg.iou_threshold = eval_threshold;
      cfg.execute.step_timeout = std::chrono::seconds(eval_timeout);
      ModuleConfig mc;
      mc.list.default_max = eval_opts.list_max;
      const auto registry = standard_registry(mc);
      const auto report = eval::run_eval(dataset, cfg, *client, *b.backend, registry);
      std::cout << report.at("aggregate").dump(2) << "\n";
      return 0;
    }

    if (*serve_cmd) {
      auto b = make_backend(serve_backend);
      service::ServiceConfig cfg;
      cfg.store_path = serve_store;
      cfg.image_dir = serve_images;
      cfg.backend = b.backend;
      cfg.client = make_client(serve_client, serve_model);
      cfg.modules.list.default_max = serve_list_max;
      for (const auto& entry : serve_pools) {
        const auto eq = entry.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::InvalidArgument, "--pool expects TASK=FILE");
        gen::PromptSpec spec;
        spec.header = serve_header.empty() ? kDefaultHeader : slurp(serve_header);
        spec.header_vars["list_max"] = std::to_string(serve_list_max);
        spec.pool = gen::load_pool(entry.substr(eq + 1));
        spec.k = std::min<int>(serve_k, static_cast<int>(spec.pool.size()));
        cfg.tasks.emplace(entry.substr(0, eq), std::move(spec));
      }
      service::Service svc(std::move(cfg));
      std::cerr << "listening on " << serve_host << ":" << serve_port << "\n";
      svc.listen(serve_host, serve_port);
      return 0;
    }

    if (*bs_cmd) {
      auto b = make_backend(bs_backend);
      for (const auto& path : bs_scenes) {
        if (!b.procedural) throw Error(ErrorCode::InvalidArgument, "--scene needs a procedural backend");
        const auto img = b.procedural->add_scene(backend::Scene::from_json(read_json(path)));
        std::cerr << path << " -> " << img.id() << "\n";
      }
      backend::BackendServer server(b.backend);
      std::cerr << "backend listening on " << bs_host << ":" << bs_port << "\n";
      server.listen(bs_host, bs_port);
      return 0;
    }

    if (*hash_cmd) {
      std::cout << codec::load_image(hash_file).id() << "\n";
      return 0;
    }
  } catch (const dsl::SyntaxError& e) {
    for (const auto& d : e.diagnostics()) std::cerr << d.to_string() << "\n";
    return 1;
  } catch (const Error& e) {
    print_error(e);
    return 1;
  }
  return 0;
}
