#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "commands.hpp"
#include "dynkt/data/interaction.hpp"
#include "dynkt/serialize.hpp"
#include "dynkt/tensor.hpp"

namespace {

using namespace dynkt;
using namespace dynkt::cli;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "key = value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", flags.seed, "overrides the configured seed");
  cmd->add_option("--out", flags.out, "output directory");
}

RunConfig load(const CommonFlags& flags) {
  RunConfig config;
  if (flags.config.empty()) {
    std::istringstream empty;
    config = parse_run_config(empty, std::filesystem::current_path(), flags.seed);
  } else {
    config = load_run_config(flags.config, flags.seed);
  }
  if (!flags.out.empty()) config.out_dir = flags.out;
  return config;
}

int fail(const char* category, const std::string& message, int code) {
  std::cerr << "error[" << category << "]: " << message << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep knowledge tracing: preprocessing, training and evaluation"};
  app.require_subcommand(1);
  CommonFlags flags;

  auto* preprocess = app.add_subcommand("preprocess", "clean a raw log and write student splits");
  add_common(preprocess, flags);
  auto* train = app.add_subcommand("train", "train a model and write a checkpoint");
  add_common(train, flags);
  auto* eval = app.add_subcommand("eval", "score the test manifest with a checkpoint");
  add_common(eval, flags);
  std::string checkpoint;
  eval->add_option("--checkpoint", checkpoint, "checkpoint file (default: <out>/checkpoint.dkt)");
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every layer and both models");
  add_common(gradcheck, flags);
  auto* significance = app.add_subcommand("significance", "Welch t-test on two examples.tsv files");
  std::string report_a, report_b;
  significance->add_option("a", report_a, "first examples.tsv")->required();
  significance->add_option("b", report_b, "second examples.tsv")->required();
  auto* synth = app.add_subcommand("synth", "generate a synthetic knowledge-tracing log");
  add_common(synth, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (significance->parsed()) {
      cmd_significance(report_a, report_b, std::cout);
      return kOk;
    }
    const RunConfig config = load(flags);
    if (preprocess->parsed()) {
      cmd_preprocess(config, std::cerr);
    } else if (train->parsed()) {
      cmd_train(config, std::cerr);
    } else if (eval->parsed()) {
      std::optional<std::filesystem::path> path;
      if (!checkpoint.empty()) path = checkpoint;
      write_report(std::cout, cmd_eval(config, path, std::cerr));
    } else if (gradcheck->parsed()) {
      if (!cmd_gradcheck(std::cout, config.seed)) return fail("numeric", "gradient check failed (see table)", kNumericFailure);
    } else if (synth->parsed()) {
      cmd_synth(config, std::cerr);
    }
    return kOk;
  } catch (const ConfigError& e) {
    return fail("config", e.what(), kUsage);
  } catch (const NumericError& e) {
    return fail("numeric", e.what(), kNumericFailure);
  } catch (const data::DataError& e) {
    return fail("data", e.what(), kDataError);
  } catch (const FormatError& e) {
    return fail("format", e.what(), kDataError);
  } catch (const std::filesystem::filesystem_error& e) {
    return fail("io", e.what(), kDataError);
  } catch (const std::exception& e) {
    return fail("data", e.what(), kDataError);
  }
}
