#include "ipd/text_template.hpp"

#include <set>
#include <sstream>

#include "ipd/errors.hpp"

namespace ipd {

struct TextTemplate::Node {
  enum class Kind { text, variable, section, inverted };
  Kind kind = Kind::text;
  std::string value;  // literal text or variable name
  std::vector<Node> children;
};

namespace {

using Node = TextTemplate::Node;

std::vector<Node> parse_nodes(const std::string& src, std::size_t& pos, const std::string& closing,
                              const std::string& name) {
  std::vector<Node> out;
  while (pos < src.size()) {
    const auto open = src.find("{{", pos);
    if (open == std::string::npos) {
      out.push_back({Node::Kind::text, src.substr(pos), {}});
      pos = src.size();
      break;
    }
    if (open > pos) out.push_back({Node::Kind::text, src.substr(pos, open - pos), {}});
    const auto close = src.find("}}", open + 2);
    if (close == std::string::npos) throw TemplateError(name + ": unterminated tag at offset " + std::to_string(open));
    std::string tag = src.substr(open + 2, close - open - 2);
    pos = close + 2;
    if (tag.empty()) throw TemplateError(name + ": empty tag at offset " + std::to_string(open));
    const char sigil = tag.front();
    if (sigil == '/') {
      if (tag.substr(1) != closing) throw TemplateError(name + ": unexpected closing tag '" + tag + "'");
      return out;
    }
    if (sigil == '#' || sigil == '^') {
      const std::string var = tag.substr(1);
      if (var.empty()) throw TemplateError(name + ": section without a name");
      Node section{sigil == '#' ? Node::Kind::section : Node::Kind::inverted, var, {}};
      section.children = parse_nodes(src, pos, var, name);
      out.push_back(std::move(section));
      continue;
    }
    out.push_back({Node::Kind::variable, tag, {}});
  }
  if (!closing.empty()) throw TemplateError(name + ": section '" + closing + "' is never closed");
  return out;
}

const std::string& lookup(const TemplateVars& vars, const std::string& key, const std::string& name) {
  auto it = vars.find(key);
  if (it == vars.end()) throw TemplateError(name + ": no value for '" + key + "'");
  return it->second;
}

void render_nodes(const std::vector<Node>& nodes, const TemplateVars& vars, const std::string& name,
                  std::string& out) {
  for (const auto& n : nodes) {
    switch (n.kind) {
      case Node::Kind::text: out += n.value; break;
      case Node::Kind::variable: out += lookup(vars, n.value, name); break;
      case Node::Kind::section:
        if (!lookup(vars, n.value, name).empty()) render_nodes(n.children, vars, name, out);
        break;
      case Node::Kind::inverted:
        if (lookup(vars, n.value, name).empty()) render_nodes(n.children, vars, name, out);
        break;
    }
  }
}

void collect(const std::vector<Node>& nodes, std::set<std::string>& names) {
  for (const auto& n : nodes) {
    if (n.kind != Node::Kind::text) names.insert(n.value);
    collect(n.children, names);
  }
}

std::string trim_trailing_newlines(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) s.pop_back();
  return s;
}

}  // namespace

TextTemplate::TextTemplate() : nodes_(std::make_shared<const std::vector<Node>>()) {}

TextTemplate TextTemplate::parse(const std::string& source, const std::string& name) {
  std::size_t pos = 0;
  TextTemplate t;
  t.name_ = name;
  t.nodes_ = std::make_shared<const std::vector<Node>>(parse_nodes(source, pos, "", name));
  return t;
}

std::string TextTemplate::render(const TemplateVars& vars) const {
  std::string out;
  render_nodes(*nodes_, vars, name_, out);
  return out;
}

std::vector<std::string> TextTemplate::variables() const {
  std::set<std::string> names;
  collect(*nodes_, names);
  return {names.begin(), names.end()};
}

SectionedTemplate SectionedTemplate::parse(const std::string& source, const std::string& name) {
  SectionedTemplate t;
  std::istringstream in(source);
  std::string line;
  std::string body;
  bool open = false;
  auto flush = [&] {
    if (open) t.sections_.push_back(TextTemplate::parse(body, name + "[" + t.labels_.back() + "]"));
    body.clear();
  };
  while (std::getline(in, line)) {
    if (line.size() > 4 && line.starts_with("[[") && line.ends_with("]]")) {
      flush();
      t.labels_.push_back(line.substr(2, line.size() - 4));
      open = true;
      continue;
    }
    if (!open) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw TemplateError(name + ": text before the first [[section]] marker");
    }
    body += line;
    body += '\n';
  }
  flush();
  if (t.labels_.empty()) throw TemplateError(name + ": no [[section]] markers");
  return t;
}

std::string SectionedTemplate::render(const TemplateVars& vars) const {
  std::string out;
  for (std::size_t i = 0; i < sections_.size(); ++i) {
    if (i > 0) out += "\n\n";
    out += trim_trailing_newlines(sections_[i].render(vars));
  }
  out += '\n';
  return out;
}

std::vector<std::string> SectionedTemplate::variables() const {
  std::set<std::string> names;
  for (const auto& s : sections_) {
    for (auto& v : s.variables()) names.insert(std::move(v));
  }
  return {names.begin(), names.end()};
}

}  // namespace ipd
