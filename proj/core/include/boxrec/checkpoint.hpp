#pragma once

// On-disk checkpoint: a directory holding
//   manifest.txt                     key=value lines (version, family, dim, tau, nu, counts, seed)
//   vocab_{users,items,attributes}.tsv  external_id<TAB>index
//   min.<class>.f32le / width.<class>.f32le   (box)   or   vec.<class>.f32le   (mf)
// Tables are raw row-major little-endian float32, count x dim.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "boxrec/models.hpp"
#include "boxrec/vocab.hpp"

namespace boxrec {

struct Vocabularies {
  Vocab users;
  Vocab items;
  Vocab attributes;

  const Vocab& of(EntityClass c) const;
  VocabSizes sizes() const { return {users.size(), items.size(), attributes.size()}; }
};

/// vocab_users.tsv, vocab_items.tsv or vocab_attributes.tsv
std::string vocab_file_name(EntityClass c);
void write_vocabularies(const std::filesystem::path& dir, const Vocabularies& vocab);
Vocabularies read_vocabularies(const std::filesystem::path& dir);

struct Checkpoint {
  std::unique_ptr<EmbeddingModel> model;
  Vocabularies vocab;
  std::uint64_t seed = 0;
};

/// Writes to a sibling temporary directory and swaps it into place, so an
/// interrupted write never clobbers an existing checkpoint at `dir`.
void save_checkpoint(const std::filesystem::path& dir, const EmbeddingModel& model,
                     const Vocabularies& vocab, std::uint64_t seed);

/// Loads a checkpoint. Falls back to `<dir>.prev` if a swap was interrupted.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

/// Rounds every parameter to float32, matching what a save/load round trip yields.
void round_to_f32(EmbeddingModel& model);

}  // namespace boxrec
