#include "boxrec/dataset.hpp"

#include <algorithm>
#include <string>
#include <tuple>
#include <utility>

#include "boxrec/errors.hpp"
#include "boxrec/io.hpp"

namespace boxrec {

// ---------------------------------------------------------------------------
// Vocab

Vocab::Vocab(std::vector<std::string> ids) {
  for (auto& id : ids) {
    if (!index_.emplace(id, ids_.size()).second) {
      throw InputError("duplicate vocabulary id '" + id + "'");
    }
    ids_.push_back(std::move(id));
  }
}

Index Vocab::add(std::string_view id) {
  auto [it, inserted] = index_.try_emplace(std::string(id), ids_.size());
  if (inserted) ids_.emplace_back(id);
  return it->second;
}

std::optional<Index> Vocab::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Index Vocab::at(std::string_view id) const {
  if (auto i = find(id)) return *i;
  throw LookupError("unknown id '" + std::string(id) + "'");
}

std::vector<std::string> Vocab::with_prefix(std::string_view prefix, std::size_t limit) const {
  std::vector<std::string> out;
  for (const auto& id : ids_) {
    if (out.size() >= limit) break;
    if (id.starts_with(prefix)) out.push_back(id);
  }
  return out;
}

void write_vocab_file(const std::filesystem::path& path, const Vocab& vocab) {
  std::string out;
  for (Index i = 0; i < vocab.size(); ++i) out += vocab.id(i) + "\t" + std::to_string(i) + "\n";
  write_file(path, out);
}

Vocab read_vocab_file(const std::filesystem::path& path) {
  std::vector<std::string> ids;
  for_each_tsv_row(path, [&](std::size_t line, const std::vector<std::string_view>& cols) {
    if (cols.size() != 2) throw ParseError(path.string(), line, "expected external_id<TAB>index");
    const auto index = parse_uint(cols[1], path.string(), line);
    if (index != ids.size()) throw ParseError(path.string(), line, "indices must be dense and ascending");
    ids.emplace_back(cols[0]);
  });
  return Vocab(std::move(ids));
}

// ---------------------------------------------------------------------------
// InteractionSet

bool InteractionSet::add(Pair p, Partition part) {
  BOXREC_REQUIRE(p.row < rows_ && p.item < items_, "pair index out of bounds");
  auto [it, inserted] = where_.try_emplace(key(p), pairs_.size());
  if (!inserted) return false;
  pairs_.push_back(p);
  tags_.push_back(part);
  return true;
}

std::optional<Partition> InteractionSet::partition(Pair p) const {
  if (p.row >= rows_ || p.item >= items_) return std::nullopt;
  auto it = where_.find(key(p));
  if (it == where_.end()) return std::nullopt;
  return tags_[it->second];
}

void InteractionSet::set_partition(Pair p, Partition part) {
  auto it = where_.find(key(p));
  BOXREC_REQUIRE(it != where_.end(), "set_partition: pair not in relation");
  tags_[it->second] = part;
}

std::vector<Pair> InteractionSet::pairs() const {
  std::vector<Pair> out = pairs_;
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Pair> InteractionSet::pairs(Partition part) const {
  std::vector<Pair> out;
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    if (tags_[i] == part) out.push_back(pairs_[i]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t InteractionSet::count(Partition part) const {
  return static_cast<std::size_t>(std::count(tags_.begin(), tags_.end(), part));
}

std::vector<std::vector<Index>> InteractionSet::items_by_row() const {
  std::vector<std::vector<Index>> out(rows_);
  for (const auto& p : pairs_) out[p.row].push_back(p.item);
  for (auto& v : out) std::sort(v.begin(), v.end());
  return out;
}

std::vector<std::vector<Index>> InteractionSet::items_by_row(Partition part) const {
  std::vector<std::vector<Index>> out(rows_);
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    if (tags_[i] == part) out[pairs_[i].row].push_back(pairs_[i].item);
  }
  for (auto& v : out) std::sort(v.begin(), v.end());
  return out;
}

std::vector<std::vector<Index>> InteractionSet::rows_by_item() const {
  std::vector<std::vector<Index>> out(items_);
  for (const auto& p : pairs_) out[p.item].push_back(p.row);
  for (auto& v : out) std::sort(v.begin(), v.end());
  return out;
}

bool InteractionSet::operator==(const InteractionSet& other) const {
  return rows_ == other.rows_ && items_ == other.items_ && pairs(Partition::train) == other.pairs(Partition::train) &&
         pairs(Partition::eval) == other.pairs(Partition::eval);
}

// ---------------------------------------------------------------------------
// Queries

std::string_view to_string(QueryType t) {
  switch (t) {
    case QueryType::simple: return "simple";
    case QueryType::inter: return "inter";
    case QueryType::neg: return "neg";
  }
  return "?";
}

QueryType parse_query_type(std::string_view s) {
  if (s == "simple") return QueryType::simple;
  if (s == "inter") return QueryType::inter;
  if (s == "neg") return QueryType::neg;
  throw ContractViolation("unknown query type '" + std::string(s) + "'");
}

QueryType QueryRecord::type() const {
  if (shape.negated_attribute) return QueryType::neg;
  return shape.positive_attributes.size() >= 2 ? QueryType::inter : QueryType::simple;
}

std::strong_ordering QueryRecord::operator<=>(const QueryRecord& other) const {
  auto tie = [](const QueryRecord& q) {
    return std::tuple(q.shape.user, q.shape.positive_attributes, q.shape.negated_attribute, q.target);
  };
  return tie(*this) <=> tie(other);
}

QueryRecord make_simple_query(Index user, Index attribute, Index item) {
  return {QueryShape{user, {attribute}, std::nullopt}, item};
}

QueryRecord make_inter_query(Index user, Index a1, Index a2, Index item) {
  return {QueryShape{user, {a1, a2}, std::nullopt}, item};
}

QueryRecord make_neg_query(Index user, Index a1, Index a2, Index item) {
  return {QueryShape{user, {a1}, a2}, item};
}

const std::vector<QueryRecord>& QuerySets::of(QueryType t) const {
  switch (t) {
    case QueryType::simple: return simple;
    case QueryType::inter: return inter;
    case QueryType::neg: return neg;
  }
  return simple;
}

std::vector<QueryRecord>& QuerySets::of(QueryType t) {
  return const_cast<std::vector<QueryRecord>&>(std::as_const(*this).of(t));
}

}  // namespace boxrec
