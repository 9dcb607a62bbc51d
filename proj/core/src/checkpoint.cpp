#include "boxrec/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "boxrec/errors.hpp"
#include "boxrec/io.hpp"

namespace fs = std::filesystem;

namespace boxrec {
namespace {

constexpr int kVersion = 1;

void write_f32le(const fs::path& path, std::span<const double> values) {
  std::string bytes(values.size() * 4, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(values[i]));
    for (int b = 0; b < 4; ++b) bytes[4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
  }
  write_file(path, bytes);
}

void read_f32le(const fs::path& path, std::span<double> out) {
  const std::string bytes = read_file(path);
  if (bytes.size() != out.size() * 4) {
    throw InputError(path.string() + ": expected " + std::to_string(out.size() * 4) +
                     " bytes, found " + std::to_string(bytes.size()));
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 * i + b])) << (8 * b);
    }
    out[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
}

std::vector<std::pair<std::string, std::span<double>>> named_blocks(EmbeddingModel& model) {
  auto blocks = model.parameter_blocks();
  std::vector<std::pair<std::string, std::span<double>>> named;
  std::size_t k = 0;
  for (EntityClass c : kEntityClasses) {
    const std::string cls(to_string(c));
    if (model.family() == Family::box) {
      named.emplace_back("min." + cls + ".f32le", blocks[k++]);
      named.emplace_back("width." + cls + ".f32le", blocks[k++]);
    } else {
      named.emplace_back("vec." + cls + ".f32le", blocks[k++]);
    }
  }
  return named;
}

}  // namespace

std::string vocab_file_name(EntityClass c) {
  switch (c) {
    case EntityClass::user: return "vocab_users.tsv";
    case EntityClass::item: return "vocab_items.tsv";
    case EntityClass::attribute: return "vocab_attributes.tsv";
  }
  return {};
}

void write_vocabularies(const fs::path& dir, const Vocabularies& vocab) {
  for (EntityClass c : kEntityClasses) write_vocab_file(dir / vocab_file_name(c), vocab.of(c));
}

Vocabularies read_vocabularies(const fs::path& dir) {
  Vocabularies v;
  v.users = read_vocab_file(dir / vocab_file_name(EntityClass::user));
  v.items = read_vocab_file(dir / vocab_file_name(EntityClass::item));
  v.attributes = read_vocab_file(dir / vocab_file_name(EntityClass::attribute));
  return v;
}

const Vocab& Vocabularies::of(EntityClass c) const {
  switch (c) {
    case EntityClass::user: return users;
    case EntityClass::item: return items;
    case EntityClass::attribute: return attributes;
  }
  return users;
}

void round_to_f32(EmbeddingModel& model) {
  for (auto block : model.parameter_blocks()) {
    for (auto& v : block) v = static_cast<double>(static_cast<float>(v));
  }
  model.sync();
}

void save_checkpoint(const fs::path& dir, const EmbeddingModel& model, const Vocabularies& vocab,
                     std::uint64_t seed) {
  BOXREC_REQUIRE(vocab.sizes() == model.sizes(), "vocabulary sizes do not match the model");
  const fs::path tmp = fs::path(dir.string() + ".tmp");
  const fs::path prev = fs::path(dir.string() + ".prev");
  fs::remove_all(tmp);
  fs::create_directories(tmp);

  std::ostringstream manifest;
  manifest << "version=" << kVersion << "\n"
           << "family=" << to_string(model.family()) << "\n"
           << "dim=" << model.dim() << "\n";
  if (const auto* box = dynamic_cast<const BoxModel*>(&model)) {
    manifest << "tau=" << format_real(box->temps().intersection) << "\n"
             << "nu=" << format_real(box->temps().volume) << "\n";
  }
  manifest << "count_users=" << vocab.users.size() << "\n"
           << "count_items=" << vocab.items.size() << "\n"
           << "count_attributes=" << vocab.attributes.size() << "\n"
           << "seed=" << seed << "\n";
  write_file(tmp / "manifest.txt", manifest.str());
  write_vocabularies(tmp, vocab);

  auto copy = model.clone();
  for (auto& [name, block] : named_blocks(*copy)) write_f32le(tmp / name, block);

  // Swap into place; `prev` only exists between the two renames.
  fs::remove_all(prev);
  if (fs::exists(dir)) fs::rename(dir, prev);
  fs::rename(tmp, dir);
  fs::remove_all(prev);
}

Checkpoint load_checkpoint(const fs::path& requested) {
  fs::path dir = requested;
  if (!fs::exists(dir / "manifest.txt")) {
    const fs::path prev = fs::path(requested.string() + ".prev");
    if (fs::exists(prev / "manifest.txt")) {
      dir = prev;
    } else {
      throw InputError("no checkpoint at " + requested.string());
    }
  }
  const auto kv = read_key_values(dir / "manifest.txt");
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw InputError((dir / "manifest.txt").string() + ": missing key " + key);
    return it->second;
  };
  const std::string manifest_path = (dir / "manifest.txt").string();
  if (get("version") != std::to_string(kVersion)) {
    throw InputError(manifest_path + ": unsupported version " + get("version"));
  }

  Checkpoint ck;
  ck.vocab = read_vocabularies(dir);
  ck.seed = parse_uint(get("seed"), manifest_path, 0);
  const VocabSizes sizes{parse_uint(get("count_users"), manifest_path, 0),
                         parse_uint(get("count_items"), manifest_path, 0),
                         parse_uint(get("count_attributes"), manifest_path, 0)};
  if (!(sizes == ck.vocab.sizes())) throw InputError(manifest_path + ": counts disagree with vocab files");
  const std::size_t dim = parse_uint(get("dim"), manifest_path, 0);

  const Family family = parse_family(get("family"));
  if (family == Family::box) {
    const GumbelTemps temps{parse_real(get("tau"), manifest_path, 0),
                            parse_real(get("nu"), manifest_path, 0)};
    ck.model = std::make_unique<BoxModel>(dim, temps, sizes);
  } else {
    ck.model = std::make_unique<MfModel>(dim, sizes);
  }
  for (auto& [name, block] : named_blocks(*ck.model)) read_f32le(dir / name, block);
  ck.model->sync();
  return ck;
}

}  // namespace boxrec
