#include "app.hpp"

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "boxrec/errors.hpp"
#include "commands.hpp"
#include "run_config.hpp"

namespace boxrec::cli {
namespace {

constexpr int kExitInput = 2;
constexpr int kExitLookup = 3;
constexpr int kExitContract = 4;

struct Flags {
  std::string config_file;
  std::map<std::string, std::string> values;  // key -> value, only flags given
};

void add_key_flags(CLI::App& cmd, Flags& flags) {
  cmd.add_option("--config", flags.config_file, "`key = value` file applied before flags");
  for (const auto& k : config_keys()) {
    cmd.add_option_function<std::string>(
        flag_name(k.key), [&flags, key = k.key](const std::string& v) { flags.values[key] = v; },
        k.help + (k.default_value.empty() ? "" : " [" + k.default_value + "]"));
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Box-embedding recommender over set-theoretic queries", "boxrec"};
  app.require_subcommand(1);
  Flags flags;
  std::vector<std::string> query_words;

  auto* split = app.add_subcommand("split", "ingest or generate data and write a split directory");
  auto* train = app.add_subcommand("train", "train a model on a split and keep the best checkpoint");
  auto* eval = app.add_subcommand("eval", "rank the split's queries with a checkpoint and write reports");
  auto* query = app.add_subcommand("query", "rank items for one query, e.g. `u1 a1 &! a2`");
  auto* synth = app.add_subcommand("synth", "run the synthetic experiment end to end");
  for (auto* cmd : {split, train, eval, query, synth}) add_key_flags(*cmd, flags);
  query->add_option("expression", query_words, "USER ATTR [& ATTR | &! ATTR]")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitInput;
  }

  try {
    RunConfig config;
    if (!flags.config_file.empty()) config.merge_file(flags.config_file);
    for (const auto& [k, v] : flags.values) config.set(k, v);
    config.apply_environment();

    Streams io{out, err};
    if (split->parsed()) {
      cmd_split(config, io);
    } else if (train->parsed()) {
      cmd_train(config, io);
    } else if (eval->parsed()) {
      cmd_eval(config, io);
    } else if (query->parsed()) {
      std::string expr;
      for (const auto& w : query_words) expr += (expr.empty() ? "" : " ") + w;
      cmd_query(config, expr, io);
    } else if (synth->parsed()) {
      cmd_synth(config, io);
    }
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const LookupError& e) {
    err << "error: " << e.what() << "\n";
    return kExitLookup;
  } catch (const ContractViolation& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitContract;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return 0;
}

}  // namespace boxrec::cli
