#include "advface/cli.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "CLI11.hpp"

#include "advface/checkpoint.hpp"
#include "advface/config.hpp"
#include "advface/errors.hpp"
#include "advface/harness.hpp"
#include "advface/image_io.hpp"
#include "advface/plotting.hpp"

namespace advface {

namespace fs = std::filesystem;

namespace {

struct Invocation {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::vector<std::string> paths;
};

nlohmann::json load_config(const Invocation& inv) {
  return load_experiment_config(inv.config_path, inv.overrides);
}

TrainingOptions base_options(const ExperimentPlan& plan) {
  TrainingOptions o;
  o.batch_size = plan.batch_size;
  o.log_every = plan.log_every;
  o.snapshot_every = plan.snapshot_every;
  o.trainer = plan.trainer;
  return o;
}

void print_losses(std::ostream& out, const char* what, const TrainingLog& log) {
  if (log.size() == 0) {
    out << what << ": 0 steps\n";
    return;
  }
  const auto& last = log.rows.back();
  out << what << ": " << log.steps.back() << " steps, final total_G " << last.total_G
      << ", total_D " << last.total_D << " (" << log.wall_time_seconds << " s)\n";
}

// --- pretrain --------------------------------------------------------------

int cmd_pretrain(const Invocation& inv, std::ostream& out) {
  const auto config = load_config(inv);
  const auto plan = plan_from_config(config);
  const fs::path dir(inv.out_dir);
  fs::create_directories(dir);
  const auto seed = plan.effective_pretrain_seed();
  auto run = run_pretrain(plan.target, plan.source, plan.pretrain_config(seed), plan.pretrain_steps,
                          seed, dir, base_options(plan));
  write_text_file(dir / "provenance.json",
                  dump_json({{"command", "pretrain"},
                             {"config_hash", config_hash(config)},
                             {"stages",
                              {{{"stage", "pretrain"},
                                {"domains", {plan.target.identity, plan.source.identity}},
                                {"steps", plan.pretrain_steps},
                                {"seed", seed}}}},
                             {"config", config}}));
  print_losses(out, "pretrain", run.log);
  out << "checkpoint: " << (dir / "checkpoints" / "final").string() << "\n";
  return kExitOk;
}

// --- protect ---------------------------------------------------------------

int cmd_protect(const Invocation& inv, std::ostream& out) {
  const auto config = load_config(inv);
  const auto plan = plan_from_config(config);
  const auto rec = plan.recipe();
  const auto method = plan.attack.method.value_or(rec.method.value_or(AttackMethod::pgd));
  const double default_eps = rec.method ? rec.epsilon : 0.1;
  auto cfg = AttackConfig::defaults(method, plan.attack.epsilon.value_or(default_eps),
                                    plan.model.resolution);
  if (plan.attack.alpha) cfg.alpha = *plan.attack.alpha;
  if (plan.attack.iterations) cfg.iterations = *plan.attack.iterations;
  cfg.momentum_decay = plan.attack.momentum_decay;
  if (plan.attack.transforms) cfg.transform_ranges = *plan.attack.transforms;
  cfg.seed = mix_seed(plan.seed, 0x70726f74);
  cfg.validate();

  DiscriminatorLoss loss;
  const auto checkpoint = config.at("checkpoint").get<std::string>();
  if (method != AttackMethod::random) {
    if (checkpoint.empty()) {
      throw ConfigError(std::string(to_string(method)) +
                        " protection needs a pre-trained checkpoint (set checkpoint=<path>)");
    }
    auto model = load_checkpoint(checkpoint);
    if (model->config().resolution != plan.model.resolution) {
      throw ConfigError("checkpoint resolution does not match model.resolution");
    }
    loss = real_label_objective(model, Domain::A);
  }

  std::vector<std::string> names;
  std::vector<FaceTensor> faces;
  const auto input = config.at("protect").at("input").get<std::string>();
  if (!input.empty()) {
    if (!fs::is_directory(input)) throw InputError("protect.input is not a directory: " + input);
    for (const auto& f : list_images(input)) {
      faces.push_back(center_resize(read_face(f), plan.model.resolution));
      names.push_back(f.stem().string() + ".png");
    }
    if (faces.empty()) throw InputError("no images in " + input);
  } else {
    for (auto i : plan.target.train_indices) {
      faces.push_back(plan.target.face(i));
      names.push_back(plan.target.names[i]);
    }
  }

  const auto results = protect_faces(loss, faces, cfg, Rng(cfg.seed));
  const fs::path dir = fs::path(inv.out_dir) / "protected";
  fs::create_directories(dir);
  nlohmann::json per_face = nlohmann::json::array();
  double worst = 0.0;
  for (std::size_t i = 0; i < faces.size(); ++i) {
    const auto path = dir / names[i];
    const int depth = write_protected_png(path, results[i].face, faces[i], cfg.epsilon);
    // re-read what actually landed on disk
    const auto written = read_face(path).chw().to(torch::kFloat64);
    const auto original = faces[i].chw().to(torch::kFloat64);
    const double linf = (written - original).abs().max().item<double>();
    const bool in_range = written.min().item<double>() >= 0.0 && written.max().item<double>() <= 1.0;
    if (linf > cfg.epsilon + 1e-6 || !in_range) {
      throw NumericError("epsilon contract violated for " + names[i] + ": linf " +
                         std::to_string(linf) + " > " + std::to_string(cfg.epsilon));
    }
    worst = std::max(worst, linf);
    const auto final_loss = results[i].final_loss();
    per_face.push_back({{"name", names[i]},
                        {"linf", linf},
                        {"bit_depth", depth},
                        {"final_loss", final_loss ? nlohmann::json(*final_loss) : nlohmann::json()}});
  }
  write_text_file(dir / "protection.json",
                  dump_json({{"attack", attack_config_to_json(cfg)},
                             {"checkpoint", checkpoint},
                             {"faces", per_face},
                             {"max_linf", worst}}));
  out << "protected " << faces.size() << " faces with " << to_string(method) << " (eps "
      << cfg.epsilon << "), max linf after write " << worst << "\n";
  return kExitOk;
}

// --- train -----------------------------------------------------------------

int cmd_train(const Invocation& inv, std::ostream& out) {
  const auto config = load_config(inv);
  const auto plan = plan_from_config(config);
  RunContext ctx;
  ctx.out_dir = fs::path(inv.out_dir);
  fs::create_directories(*ctx.out_dir);
  const auto reuse = config.at("pretrained_checkpoint").get<std::string>();
  if (!reuse.empty()) ctx.pretrained = load_checkpoint(reuse);
  const auto result = run_variant(plan, ctx);
  out << "variant " << to_string(plan.variant) << " (" << plan.recipe().setting << ")\n";
  for (const auto& stage : result.provenance.at("stages")) {
    out << "  " << stage.at("stage").get<std::string>() << "\n";
  }
  print_losses(out, "attacker", result.log);
  return kExitOk;
}

// --- eval ------------------------------------------------------------------

EvaluationOptions evaluation_options(const nlohmann::json& config, int resolution) {
  const auto& e = config.at("eval");
  EvaluationOptions o;
  o.margin = e.at("margin").is_null() ? default_aih_margin(resolution) : e.at("margin").get<int>();
  e.at("top_fraction").get_to(o.top_fraction);
  const auto mode = e.at("spectrum_mode").get<std::string>();
  if (mode == "luma") {
    o.spectrum_mode = SpectrumMode::luma;
  } else if (mode == "channel_average") {
    o.spectrum_mode = SpectrumMode::channel_average;
  } else {
    throw ConfigError("eval.spectrum_mode must be luma or channel_average");
  }
  const auto denom = e.at("ati_denominator").get<std::string>();
  if (denom == "top_count") {
    o.ati_denominator = AtiDenominator::top_count;
  } else if (denom == "full_mask") {
    o.ati_denominator = AtiDenominator::full_mask;
  } else {
    throw ConfigError("eval.ati_denominator must be top_count or full_mask");
  }
  return o;
}

int cmd_eval(const Invocation& inv, std::ostream& out) {
  const auto config = load_config(inv);
  const auto plan = plan_from_config(config);
  const fs::path dir(inv.out_dir);
  fs::path checkpoint = config.at("checkpoint").get<std::string>();
  if (checkpoint.empty()) checkpoint = dir / "checkpoints" / "final";
  if (!fs::exists(checkpoint)) {
    throw ConfigError("no checkpoint to evaluate (set checkpoint=<path>; looked for " +
                      checkpoint.string() + ")");
  }
  auto model = load_checkpoint(checkpoint);
  if (model->config().resolution != plan.model.resolution) {
    throw ConfigError("checkpoint resolution does not match model.resolution");
  }
  const auto options = evaluation_options(config, plan.model.resolution);
  const auto mask_dir = config.at("eval").at("mask_dir").get<std::string>();
  std::optional<fs::path> masks;
  if (!mask_dir.empty()) masks = mask_dir;
  auto ev = evaluate_swaps(model, plan.source, options, masks);

  std::string label(to_string(plan.variant));
  const auto provenance = checkpoint.parent_path().parent_path() / "provenance.json";
  if (fs::exists(provenance)) {
    const auto prov = nlohmann::json::parse(read_text_file(provenance));
    if (prov.contains("variant")) label = prov.at("variant").get<std::string>();
  }
  ev.report.variant = label;

  const auto reports = dir / "reports";
  for (const auto& [name, face] : ev.swapped) {
    const auto stem = fs::path(name).stem().string();
    write_face_png(reports / "swapped" / (stem + ".png"), face);
    write_grey_png(reports / "spectra" / (stem + ".png"),
                   spectrum_display(fft_magnitude(face, options.spectrum_mode)));
  }
  write_text_file(reports / "metrics.json", dump_json(report_to_json(ev.report)));
  write_text_file(reports / "metrics.csv", report_to_csv(ev.report));
  out << label << ": " << ev.report.per_image.size() << " swaps, AIH mean " << ev.report.aih.mean;
  if (ev.report.ati) out << ", ATI mean " << ev.report.ati->mean;
  out << "\n";
  return kExitOk;
}

// --- report ----------------------------------------------------------------

struct RunRecord {
  std::string source;
  std::string variant;
  MetricReport report;
  std::optional<TrainingLog> log;
};

RunRecord load_run(const fs::path& path) {
  RunRecord rec;
  rec.source = path.string();
  fs::path metrics = path;
  std::optional<std::string> provenance_label;
  if (fs::is_directory(path)) {
    metrics = path / "reports" / "metrics.json";
    if (fs::exists(path / "provenance.json")) {
      const auto prov = nlohmann::json::parse(read_text_file(path / "provenance.json"));
      if (prov.contains("variant")) provenance_label = prov.at("variant").get<std::string>();
    }
    if (fs::exists(path / "logs" / "attacker" / "loss_log.csv")) {
      rec.log = read_log_csv(path / "logs" / "attacker" / "loss_log.csv");
    }
  }
  if (!fs::exists(metrics)) throw InputError("no metric report at " + metrics.string());
  try {
    rec.report = report_from_json(nlohmann::json::parse(read_text_file(metrics)));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("cannot parse " + metrics.string() + ": " + e.what());
  }
  rec.variant = std::string(to_string(parse_variant(rec.report.variant)));
  if (provenance_label && std::string(to_string(parse_variant(*provenance_label))) != rec.variant) {
    throw ConfigError("conflicting variant labels in " + path.string() + ": report says '" +
                      rec.report.variant + "', provenance says '" + *provenance_label + "'");
  }
  return rec;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

int cmd_report(const Invocation& inv, std::ostream& out) {
  if (inv.paths.empty()) throw ConfigError("report needs at least one run directory or metrics file");
  std::map<Variant, std::vector<RunRecord>> groups;
  for (const auto& p : inv.paths) {
    auto rec = load_run(p);
    groups[parse_variant(rec.variant)].push_back(std::move(rec));
  }

  const char* loss_fields[] = {"adv", "edge", "total_G", "total_D"};
  std::string csv = "setting,variant,runs,images,aih_mean,aih_std,ati_mean,adv_tail,edge_tail,total_G_tail,total_D_tail\n";
  nlohmann::json rows = nlohmann::json::array();
  std::vector<std::string> bar_labels;
  std::vector<double> bar_values, bar_errors;
  std::map<std::string, std::vector<Series>> curves;
  for (auto v : all_variants()) {
    auto it = groups.find(v);
    if (it == groups.end()) continue;
    const auto& runs = it->second;
    std::vector<double> aih_means, ati_means;
    std::size_t images = 0;
    for (const auto& r : runs) {
      aih_means.push_back(r.report.aih.mean);
      if (r.report.ati) ati_means.push_back(r.report.ati->mean);
      images += r.report.per_image.size();
    }
    // one run passes its own per-image spread through; several runs report the spread of run means
    const auto agg = aggregate(aih_means);
    const double aih_std = runs.size() == 1 ? runs.front().report.aih.std : agg.std;
    nlohmann::json row{{"setting", recipe_for(v).setting},
                       {"variant", std::string(to_string(v))},
                       {"runs", runs.size()},
                       {"images", images},
                       {"aih_mean", agg.mean},
                       {"aih_std", aih_std}};
    row["ati_mean"] = ati_means.empty() ? nlohmann::json() : nlohmann::json(aggregate(ati_means).mean);
    for (const char* field : loss_fields) {
      std::vector<double> tails;
      for (const auto& r : runs) {
        if (r.log && r.log->size() > 0) tails.push_back(r.log->tail_mean(field));
      }
      row[std::string(field) + "_tail"] =
          tails.empty() ? nlohmann::json() : nlohmann::json(aggregate(tails).mean);
    }
    for (const auto& r : runs) {
      if (!r.log || r.log->size() == 0) continue;
      for (std::size_t f = 0; f < LossBreakdown::kFieldNames.size(); ++f) {
        Series s{std::string(to_string(v)), std::vector<double>(r.log->steps.begin(), r.log->steps.end()), {}};
        for (const auto& b : r.log->rows) s.y.push_back(b.values()[f]);
        curves[std::string(LossBreakdown::kFieldNames[f])].push_back(std::move(s));
      }
      break;  // first run of each variant
    }
    auto cell = [&](const char* key) {
      return row[key].is_null() ? std::string() : fmt(row[key].get<double>());
    };
    csv += row["setting"].get<std::string>() + "," + row["variant"].get<std::string>() + "," +
           std::to_string(runs.size()) + "," + std::to_string(images) + "," + cell("aih_mean") + "," +
           cell("aih_std") + "," + cell("ati_mean") + "," + cell("adv_tail") + "," +
           cell("edge_tail") + "," + cell("total_G_tail") + "," + cell("total_D_tail") + "\n";
    bar_labels.push_back(row["variant"].get<std::string>());
    bar_values.push_back(agg.mean);
    bar_errors.push_back(aih_std);
    rows.push_back(std::move(row));
  }

  const auto dir = fs::path(inv.out_dir) / "reports";
  write_text_file(dir / "comparison.csv", csv);
  write_text_file(dir / "comparison.json", dump_json({{"rows", rows}, {"inputs", inv.paths}}));
  write_bar_chart(dir / "aih.png", "AIH (holdout swaps)", bar_labels, bar_values, bar_errors);
  for (const auto& [field, series] : curves) {
    write_line_plot(dir / ("loss_" + field + ".png"), field, series);
  }
  out << csv;
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Protect faces against face-swap training and measure the damage", "advface"};
  app.require_subcommand(1);
  Invocation inv;
  auto add_common = [&inv](CLI::App* sub) {
    sub->add_option("--config", inv.config_path, "experiment config (JSON)")->required();
    sub->add_option("--set", inv.overrides, "dotted.key=value override (repeatable)");
    sub->add_option("--out", inv.out_dir, "output directory")->required();
  };
  auto* pretrain = app.add_subcommand("pretrain", "pre-train the defender's model on (target, source)");
  auto* protect = app.add_subcommand("protect", "write protected copies of the target faces");
  auto* train = app.add_subcommand("train", "run one variant recipe end to end");
  auto* eval = app.add_subcommand("eval", "swap holdout source faces and score AIH/ATI");
  auto* report = app.add_subcommand("report", "merge run directories into a comparison table");
  for (auto* sub : {pretrain, protect, train, eval}) add_common(sub);
  report->add_option("paths", inv.paths, "run directories or metrics.json files")->required();
  report->add_option("--out", inv.out_dir, "output directory")->required();

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitConfig;
  }

  if (!inv.config_path.empty() && !fs::is_regular_file(inv.config_path)) {
    err << "configuration error: config file not found: " << inv.config_path << "\n";
    err << app.get_subcommands().front()->help();
    return kExitConfig;
  }
  try {
    if (!inv.out_dir.empty()) fs::create_directories(inv.out_dir);
    if (*pretrain) return cmd_pretrain(inv, out);
    if (*protect) return cmd_protect(inv, out);
    if (*train) return cmd_train(inv, out);
    if (*eval) return cmd_eval(inv, out);
    if (*report) return cmd_report(inv, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const IngestionError& e) {
    err << "ingestion error: " << e.what() << "\n";
    return kExitInput;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace advface
