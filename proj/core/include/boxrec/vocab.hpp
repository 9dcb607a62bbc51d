#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace boxrec {

using Index = std::size_t;

/// Dense mapping between external string ids and indices, in order of first appearance.
class Vocab {
 public:
  Vocab() = default;
  explicit Vocab(std::vector<std::string> ids);

  /// Returns the existing index of `id` or appends it.
  Index add(std::string_view id);
  std::optional<Index> find(std::string_view id) const;
  /// Throws LookupError for unknown ids.
  Index at(std::string_view id) const;
  const std::string& id(Index index) const { return ids_.at(index); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }

  /// Known ids starting with `prefix`, in index order.
  std::vector<std::string> with_prefix(std::string_view prefix, std::size_t limit = 10) const;

  bool operator==(const Vocab& other) const { return ids_ == other.ids_; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, Index> index_;
};

/// `external_id<TAB>index` lines, indices dense and ascending.
void write_vocab_file(const std::filesystem::path& path, const Vocab& vocab);
Vocab read_vocab_file(const std::filesystem::path& path);

}  // namespace boxrec
