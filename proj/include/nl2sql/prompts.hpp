#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace nl2sql {

using TemplateVars = std::map<std::string, std::string>;

// Substitutes `{name}` for every name present in `vars`. Substituted text is
// not rescanned, and braces that do not name a known variable stay verbatim.
std::string fill_template(std::string_view tmpl, const TemplateVars& vars);

// Named prompt templates. The built-in set is compiled from prompts/*.txt;
// a directory can override any subset of them.
class PromptLibrary {
 public:
  static const PromptLibrary& builtin();
  static PromptLibrary from_directory(const std::filesystem::path& dir);

  const std::string& get(std::string_view name) const;
  std::string render(std::string_view name, const TemplateVars& vars) const;
  const std::map<std::string, std::string, std::less<>>& all() const { return templates_; }

 private:
  std::map<std::string, std::string, std::less<>> templates_;
};

}  // namespace nl2sql
