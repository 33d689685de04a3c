#ifndef RCT_CSV_H_
#define RCT_CSV_H_

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace rct::csv {

using Row = std::vector<std::string>;

// RFC 4180 reader: quoted fields may contain separators, doubled quotes and
// line breaks. CRLF and LF line endings are both accepted. Blank lines are
// skipped.
std::vector<Row> parse(std::istream& in, char separator = ',');
std::vector<Row> parse(std::string_view text, char separator = ',');

// Quotes a field only when it contains a separator, quote or line break.
std::string escape(std::string_view field, char separator = ',');
void write_row(std::ostream& out, const Row& row, char separator = ',');

}  // namespace rct::csv

#endif  // RCT_CSV_H_
