#pragma once

// Flat `section.name = value` configuration shared by every subcommand.
// Values come from built-in defaults, then an optional config file, then
// command-line flags; BOXREC_SEED, when set, replaces every *.seed key.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "boxrec/models.hpp"
#include "boxrec/pipeline.hpp"
#include "boxrec/synthetic.hpp"
#include "boxrec/trainer.hpp"

namespace boxrec::cli {

struct KeySpec {
  std::string key;
  std::string default_value;
  std::string help;
};

/// Every key the tools understand, in display order.
const std::vector<KeySpec>& config_keys();

/// "train.learning_rate" -> "--train.learning-rate".
std::string flag_name(std::string_view key);

class RunConfig {
 public:
  RunConfig();

  /// Throws InputError for an undeclared key.
  void set(std::string_view key, std::string value);
  /// Reads `key = value` lines; `#` starts a comment.
  void merge_file(const std::filesystem::path& path);
  /// Sets every key ending in ".seed".
  void override_seeds(std::uint64_t seed);
  /// Applies BOXREC_SEED if the variable is set.
  void apply_environment();

  const std::string& get(std::string_view key) const;
  std::size_t get_uint(std::string_view key) const;
  double get_real(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  /// Empty or "auto" gives nullopt.
  std::optional<double> get_optional_real(std::string_view key) const;
  std::optional<std::size_t> get_optional_uint(std::string_view key) const;
  /// Comma-separated, blanks dropped.
  std::vector<std::string> get_list(std::string_view key) const;

  /// Effective configuration as `key = value` lines, sorted by key.
  std::string dump() const;

  ModelConfig model_config() const;
  TrainConfig train_config() const;
  SplitConfig split_config() const;
  FrequencyThresholds frequency_thresholds() const;
  SyntheticConfig synthetic_config() const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

}  // namespace boxrec::cli
