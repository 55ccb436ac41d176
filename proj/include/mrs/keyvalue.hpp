#ifndef MRS_KEYVALUE_HPP
#define MRS_KEYVALUE_HPP

#include <map>
#include <string>
#include <string_view>

namespace mrs {

// Parses `key = value` lines. Blank lines and '#' comments are skipped.
// Duplicate keys and lines without '=' raise ValidationError.
std::map<std::string, std::string> parse_key_value(std::string_view text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace mrs

#endif  // MRS_KEYVALUE_HPP
