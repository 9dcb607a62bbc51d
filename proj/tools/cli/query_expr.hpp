#pragma once

// Query grammar for the `query` command:  USER ATTR ( ('&' | '&!') ATTR )?

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "boxrec/checkpoint.hpp"
#include "boxrec/geometry.hpp"

namespace boxrec::cli {

struct QueryExpression {
  std::string user;
  std::vector<std::string> attributes;  // positive
  std::optional<std::string> negated;
};

/// Throws InputError on malformed input.
QueryExpression parse_query_expression(std::string_view text);

/// Maps ids to indices. Unknown ids throw LookupError naming known ids that
/// share the longest matching prefix.
QueryShape resolve_query(const QueryExpression& expr, const Vocabularies& vocab);

}  // namespace boxrec::cli
