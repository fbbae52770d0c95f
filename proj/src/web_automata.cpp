#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "autoesc/web.hpp"
#include "builtin_tables.hpp"

namespace autoesc {

std::string_view builtin_table(std::string_view file) {
  for (const auto& [name, text] : kBuiltinTables)
    if (name == file) return text;
  return {};
}

namespace {

std::string read_table(std::string_view file, const std::string& dir) {
  if (dir.empty()) {
    auto text = builtin_table(file);
    if (text.empty()) throw MachineLoadError("no built-in table '" + std::string(file) + "'", {});
    return std::string(text);
  }
  std::string path = dir + "/" + std::string(file);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MachineLoadError("cannot read table file '" + path + "'", {});
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string file_for_machine(std::string_view name) {
  std::string f(name);
  std::transform(f.begin(), f.end(), f.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return f + ".tt";
}

}  // namespace

std::shared_ptr<const Machine> load_machine(std::string_view root_file, const std::string& tables_dir) {
  std::vector<TransitionTable> tables;
  std::vector<std::string> queue{std::string(root_file)};
  std::string root_name;
  Diagnostics problems;
  for (std::size_t i = 0; i < queue.size(); ++i) {
    std::string origin = tables_dir.empty() ? "<builtin>/" + queue[i] : tables_dir + "/" + queue[i];
    auto parsed = parse_table(read_table(queue[i], tables_dir), origin);
    for (auto& d : parsed.diagnostics)
      if (d.severity == Severity::Error) problems.push_back(d);
    if (!parsed.table) continue;
    for (auto& d : validate_table(*parsed.table))
      if (d.severity == Severity::Error) problems.push_back(d);
    if (i == 0) root_name = parsed.table->name;
    for (const auto& sub : parsed.table->subsidiaries) {
      auto f = file_for_machine(sub);
      if (std::find(queue.begin(), queue.end(), f) == queue.end()) queue.push_back(f);
    }
    tables.push_back(std::move(*parsed.table));
  }
  if (!problems.empty()) {
    std::string msg = "invalid transition tables";
    for (const auto& d : problems) msg += "\n" + format_diagnostic(d);
    throw MachineLoadError(msg, problems);
  }
  try {
    return std::make_shared<const Machine>(std::move(tables), root_name);
  } catch (const std::invalid_argument& e) {
    throw MachineLoadError(e.what(), {});
  }
}

std::shared_ptr<const Machine> html_machine(const std::string& tables_dir) {
  if (!tables_dir.empty()) return load_machine("html.tt", tables_dir);
  static const std::shared_ptr<const Machine> builtin = load_machine("html.tt");
  return builtin;
}

std::shared_ptr<const Machine> text_machine(const std::string& tables_dir) {
  if (!tables_dir.empty()) return load_machine("text.tt", tables_dir);
  static const std::shared_ptr<const Machine> builtin = load_machine("text.tt");
  return builtin;
}

std::shared_ptr<const Machine> machine_for_tag(std::string_view tag, const std::string& tables_dir) {
  if (tag == "html") return html_machine(tables_dir);
  if (tag == "text" || tag == "cackle") return text_machine(tables_dir);
  return nullptr;
}

}  // namespace autoesc
