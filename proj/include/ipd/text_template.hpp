#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace ipd {

using TemplateVars = std::map<std::string, std::string>;

/// Minimal mustache subset: `{{name}}` substitutes, `{{#name}}...{{/name}}`
/// renders its body when `name` is non-empty, `{{^name}}...{{/name}}` when it
/// is empty. Sections do not nest under the same name. Every referenced
/// variable must be supplied at render time.
class TextTemplate {
 public:
  TextTemplate();
  /// Throws TemplateError on unbalanced or malformed tags.
  static TextTemplate parse(const std::string& source, const std::string& name = "<template>");

  /// Throws TemplateError when a referenced variable is missing from `vars`.
  std::string render(const TemplateVars& vars) const;

  /// Every variable name referenced anywhere in the template, sorted.
  std::vector<std::string> variables() const;

  struct Node;

 private:
  std::string name_;
  std::shared_ptr<const std::vector<Node>> nodes_;
};

/// A template split into labelled sections by `[[label]]` marker lines.
/// Rendered sections are trimmed of trailing blank lines and joined by one
/// empty line; empty sections are kept so the section order is fixed.
class SectionedTemplate {
 public:
  static SectionedTemplate parse(const std::string& source, const std::string& name = "<template>");

  const std::vector<std::string>& labels() const { return labels_; }
  std::string render(const TemplateVars& vars) const;
  std::vector<std::string> variables() const;

 private:
  std::vector<std::string> labels_;
  std::vector<TextTemplate> sections_;
};

}  // namespace ipd
