#include "rct/csv.h"

#include <iterator>
#include <sstream>
#include <stdexcept>

namespace rct::csv {

std::vector<Row> parse(std::string_view text, char separator) {
  std::vector<Row> rows;
  Row row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  bool field_quoted = false;
  std::size_t line = 1;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
    field_quoted = false;
  };
  auto end_row = [&] {
    const bool blank = row.empty() && field.empty() && !field_started;
    if (!blank) {
      end_field();
      rows.push_back(std::move(row));
    }
    row.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && field.empty() && !field_quoted) {
      in_quotes = true;
      field_quoted = true;
      field_started = true;
    } else if (c == separator) {
      end_field();
      field_started = true;
    } else if (c == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') continue;
      end_row();
      ++line;
    } else if (c == '\n') {
      end_row();
      ++line;
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) {
    throw std::runtime_error("csv: unterminated quoted field near line " +
                             std::to_string(line));
  }
  end_row();
  return rows;
}

std::vector<Row> parse(std::istream& in, char separator) {
  const std::string text{std::istreambuf_iterator<char>(in),
                         std::istreambuf_iterator<char>()};
  return parse(std::string_view(text), separator);
}

std::string escape(std::string_view field, char separator) {
  const bool needs_quotes =
      field.find_first_of(std::string{separator, '"', '\n', '\r'}) !=
      std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const Row& row, char separator) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i > 0) out << separator;
    out << escape(row[i], separator);
  }
  out << '\n';
}

}  // namespace rct::csv
