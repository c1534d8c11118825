#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <functional>
#include <json.hpp>
#include <map>
#include <sstream>

#include "commands.hpp"
#include "config.hpp"
#include "edl/data.hpp"
#include "edl/train.hpp"

namespace edl::app {
namespace {

void report_error(std::ostream& err, const std::string& kind, const std::string& field, const std::string& message) {
  const nlohmann::json line{{"error", kind}, {"field", field}, {"message", message}};
  err << line.dump() << '\n';
}

std::string config_fields_help() {
  std::ostringstream os;
  os << "Configuration fields (JSON file sections, or --set section.key=value):\n";
  for (const auto& f : field_docs()) {
    os << "  " << f.name << " <" << f.type << "> default " << f.default_value << "\n      " << f.help << "\n";
  }
  return os.str();
}

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
};

ExperimentConfig resolve(const Options& o) {
  ExperimentConfig cfg = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
  for (const auto& s : o.overrides) apply_override(cfg, s);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) {
    cfg.out = o.out;
  } else if (cfg.out.empty()) {
    const char* root = std::getenv(kOutputRootEnv);
    cfg.out = root != nullptr && *root != '\0' ? root : "edl_out";
  }
  cfg.validate();
  return cfg;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Evidential binary classification with uncertainty-based sample rejection and bootstrapping.", "edl"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  const std::map<std::string, std::pair<std::string, std::function<Written(const ExperimentConfig&)>>> commands{
      {"gen", {"Generate synthetic train/val/test CSVs, an out-of-distribution probe and provenance.json.", cmd_gen}},
      {"train", {"Train the evidential model (or ensemble) and the sigmoid baseline; write checkpoints and history.",
                 cmd_train}},
      {"eval", {"Coverage report, probability-interval baseline comparison and uncertainty by noise flag.", cmd_eval}},
      {"bootstrap", {"Drop the most uncertain training samples per epsilon, retrain and report test metrics.",
                     cmd_bootstrap}},
  };

  Options opts;
  const std::string footer = config_fields_help() + "\nOutput root when neither --out nor 'out' is given: $" +
                             kOutputRootEnv + ", else ./edl_out.\n";
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, entry] : commands) {
    auto* sub = app.add_subcommand(name, entry.first);
    sub->add_option("--config", opts.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", opts.seed, "Override the run seed");
    sub->add_option("--out", opts.out, "Output directory");
    sub->add_option("--set", opts.overrides, "Override one field: section.key=value (repeatable)");
    sub->footer(footer);
    subs[name] = sub;
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", "", e.what());
    return kUsageError;
  }

  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    try {
      const auto cfg = resolve(opts);
      for (const auto& file : commands.at(name).second(cfg)) out << file << '\n';
      return kOk;
    } catch (const ConfigError& e) {
      report_error(err, "config", e.field(), e.what());
      return kUsageError;
    } catch (const CsvError& e) {
      report_error(err, "data", "line " + std::to_string(e.line()), e.what());
      return kRuntimeError;
    } catch (const TrainingDiverged& e) {
      report_error(err, "diverged", "train", e.what());
      return kRuntimeError;
    } catch (const std::exception& e) {
      report_error(err, "runtime", "", e.what());
      return kRuntimeError;
    }
  }
  return kUsageError;
}

}  // namespace edl::app
