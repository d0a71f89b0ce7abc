#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace alignaudit {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Fixed-point decimal rendering, locale independent. Negative zero prints as 0.
std::string format_fixed(double value, int precision);

// Substitutes `{name}` placeholders. Unknown placeholders throw ConfigError
// naming the placeholder; `{{` and `}}` escape literal braces.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars);

// Names of all placeholders referenced by a template.
std::vector<std::string> template_placeholders(std::string_view tmpl);

std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, std::string_view contents);

}  // namespace alignaudit
