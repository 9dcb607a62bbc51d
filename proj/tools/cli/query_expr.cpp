#include "query_expr.hpp"

#include <cctype>

#include "boxrec/errors.hpp"

namespace boxrec::cli {
namespace {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '&') {
      const bool neg = i + 1 < text.size() && text[i + 1] == '!';
      tokens.emplace_back(neg ? "&!" : "&");
      i += neg ? 2 : 1;
    } else {
      std::size_t j = i;
      while (j < text.size() && text[j] != '&' && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
      tokens.emplace_back(text.substr(i, j - i));
      i = j;
    }
  }
  return tokens;
}

Index lookup(const Vocab& vocab, std::string_view kind, const std::string& id) {
  if (auto found = vocab.find(id)) return *found;
  std::vector<std::string> near;
  for (std::size_t len = id.size(); len > 0 && near.empty(); --len) {
    near = vocab.with_prefix(std::string_view(id).substr(0, len));
  }
  std::string msg = "unknown " + std::string(kind) + " '" + id + "'";
  if (!near.empty()) {
    msg += "; nearest known ids:";
    for (const auto& n : near) msg += " " + n;
  }
  throw LookupError(msg);
}

}  // namespace

QueryExpression parse_query_expression(std::string_view text) {
  const auto tokens = tokenize(text);
  const auto is_op = [](const std::string& t) { return t == "&" || t == "&!"; };
  if (tokens.size() != 2 && tokens.size() != 4) {
    throw InputError("query must be 'USER ATTR' or 'USER ATTR & ATTR' or 'USER ATTR &! ATTR', got '" +
                     std::string(text) + "'");
  }
  if (is_op(tokens[0]) || is_op(tokens[1]) || (tokens.size() == 4 && (!is_op(tokens[2]) || is_op(tokens[3])))) {
    throw InputError("malformed query '" + std::string(text) + "'");
  }
  QueryExpression q;
  q.user = tokens[0];
  q.attributes.push_back(tokens[1]);
  if (tokens.size() == 4) {
    if (tokens[2] == "&") {
      q.attributes.push_back(tokens[3]);
    } else {
      q.negated = tokens[3];
    }
  }
  return q;
}

QueryShape resolve_query(const QueryExpression& expr, const Vocabularies& vocab) {
  QueryShape shape;
  shape.user = lookup(vocab.users, "user", expr.user);
  for (const auto& a : expr.attributes) shape.positive_attributes.push_back(lookup(vocab.attributes, "attribute", a));
  if (expr.negated) shape.negated_attribute = lookup(vocab.attributes, "attribute", *expr.negated);
  return shape;
}

}  // namespace boxrec::cli
