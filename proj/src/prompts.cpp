#include "nl2sql/prompts.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "nl2sql/errors.hpp"

namespace nl2sql {

namespace detail {
// Generated from prompts/*.txt at configure time.
const std::map<std::string, std::string, std::less<>>& builtin_prompt_texts();
}  // namespace detail

std::string fill_template(std::string_view tmpl, const TemplateVars& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find('{', pos);
    if (open == std::string_view::npos) break;
    out.append(tmpl.substr(pos, open - pos));
    auto close = open + 1;
    while (close < tmpl.size() &&
           (std::islower(static_cast<unsigned char>(tmpl[close])) || tmpl[close] == '_')) {
      ++close;
    }
    if (close < tmpl.size() && tmpl[close] == '}' && close > open + 1) {
      const std::string name(tmpl.substr(open + 1, close - open - 1));
      if (auto it = vars.find(name); it != vars.end()) {
        out += it->second;
        pos = close + 1;
        continue;
      }
    }
    out += '{';
    pos = open + 1;
  }
  if (pos < tmpl.size()) out.append(tmpl.substr(pos));
  return out;
}

const PromptLibrary& PromptLibrary::builtin() {
  static const PromptLibrary lib = [] {
    PromptLibrary l;
    l.templates_ = detail::builtin_prompt_texts();
    return l;
  }();
  return lib;
}

PromptLibrary PromptLibrary::from_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::Config, "prompt directory not found: " + dir.string());
  }
  PromptLibrary lib = builtin();
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    lib.templates_[entry.path().stem().string()] = buf.str();
  }
  return lib;
}

const std::string& PromptLibrary::get(std::string_view name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) {
    throw Error(ErrorCode::Config, "unknown prompt template: " + std::string(name));
  }
  return it->second;
}

std::string PromptLibrary::render(std::string_view name, const TemplateVars& vars) const {
  return fill_template(get(name), vars);
}

}  // namespace nl2sql
