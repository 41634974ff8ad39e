#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "stusim/errors.hpp"
#include "stusim/records.hpp"

namespace stusim {

/// Prompt templates live as external text files with {{placeholder}} slots so
/// they can be reworded without recompiling. One file per template name.
class PromptLibrary {
 public:
  PromptLibrary() = default;

  /// Loads every *.txt file in the directory; the stem is the template name.
  static PromptLibrary from_directory(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
      throw IoError("prompt directory not found: " + dir.string());
    PromptLibrary library;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
      if (entry.is_regular_file() && entry.path().extension() == ".txt")
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& file : files)
      library.add(file.stem().string(), read_text_file(file));
    return library;
  }

  void add(const std::string& name, std::string text) { templates_[name] = std::move(text); }

  bool has(const std::string& name) const { return templates_.count(name) > 0; }

  const std::string& raw(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw TemplateError("unknown prompt template '" + name + "'");
    return it->second;
  }

  /// Substitutes every {{key}}; a placeholder left unresolved is an error so
  /// a renamed slot cannot silently reach the model. One pass over the
  /// template, so braces inside substituted values are never re-scanned.
  std::string render(const std::string& name,
                     const std::map<std::string, std::string>& values) const {
    const std::string& text = raw(name);
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
      const std::size_t open = text.find("{{", pos);
      if (open == std::string::npos) {
        out.append(text, pos, std::string::npos);
        break;
      }
      out.append(text, pos, open - pos);
      const std::size_t close = text.find("}}", open);
      if (close == std::string::npos)
        throw TemplateError("template '" + name + "' has unresolved placeholder " +
                            text.substr(open));
      const std::string key = text.substr(open + 2, close - open - 2);
      auto it = values.find(key);
      if (it == values.end())
        throw TemplateError("template '" + name + "' has unresolved placeholder {{" + key + "}}");
      out += it->second;
      pos = close + 2;
    }
    return out;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(templates_.size());
    for (const auto& [name, text] : templates_) out.push_back(name);
    return out;
  }

 private:
  std::map<std::string, std::string> templates_;
};

}  // namespace stusim
