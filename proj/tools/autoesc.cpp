// autoesc: check, compile, render and extract messages from templates.
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "autoesc/compiler.hpp"
#include "autoesc/i18n.hpp"
#include "autoesc/runtime.hpp"
#include "autoesc/template.hpp"
#include "autoesc/web.hpp"

using namespace autoesc;

namespace {

constexpr int kOk = 0;
constexpr int kErrors = 1;
constexpr int kUsage = 2;

struct Failure {
  int code;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "autoesc: cannot read '" << path << "'\n";
    throw Failure{kUsage};
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print(std::ostream& os, const Diagnostics& ds) {
  for (const auto& d : ds) os << format_diagnostic(d) << "\n";
}

int exit_code(const Diagnostics& ds, bool strict) {
  if (has_errors(ds)) return kErrors;
  if (strict && !ds.empty()) return kErrors;
  return kOk;
}

struct Loaded {
  AppendProgram program;
  std::shared_ptr<const Machine> machine;
};

Loaded load_template(const std::string& path, const std::string& tables, std::ostream& diag_out) {
  auto parsed = parse_template(read_file(path), path);
  if (!parsed.ir) {
    print(diag_out, parsed.diagnostics);
    throw Failure{kUsage};
  }
  std::shared_ptr<const Machine> machine;
  try {
    machine = machine_for_tag(parsed.ir->tag, tables);
  } catch (const MachineLoadError& e) {
    std::cerr << "autoesc: " << e.what() << "\n";
    throw Failure{kUsage};
  }
  if (!machine) {
    print(diag_out, {make_error("unknown tag '" + parsed.ir->tag + "'", {path, 1, 1})});
    throw Failure{kUsage};
  }
  return {desugar(*parsed.ir), machine};
}

Bindings load_bindings(const std::string& path) {
  try {
    return bindings_from_json(read_file(path));
  } catch (const BindingsError& e) {
    std::cerr << path << ": " << e.what() << "\n";
    throw Failure{kUsage};
  }
}

void write_output(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out || !(out << text)) {
    std::cerr << "autoesc: cannot write '" << out_path << "'\n";
    throw Failure{kUsage};
  }
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

struct Options {
  std::string input;
  std::string bindings;
  std::string out;
  std::string tables;
  std::string mode = "dynamic";
  std::string translations;
  bool strict = false;
};

int cmd_check(const Options& o) {
  auto t = load_template(o.input, o.tables, std::cout);
  auto r = propagate(t.program, *t.machine);
  print(std::cout, r.diagnostics);
  return exit_code(r.diagnostics, o.strict);
}

int cmd_compile(const Options& o) {
  auto t = load_template(o.input, o.tables, std::cerr);
  auto r = propagate(t.program, *t.machine);
  print(std::cerr, r.diagnostics);
  int code = exit_code(r.diagnostics, o.strict);
  if (code != kOk) return code;
  write_output(o.out, plan_to_json(erase(r.annotated, t.machine->language())));
  return kOk;
}

struct Rendered {
  std::string text;
  std::vector<Mark> marks;
  int code = kOk;
  bool ok = false;
};

Rendered do_render(const Options& o) {
  Bindings b = load_bindings(o.bindings);
  Rendered out;
  if (o.mode == "static") {
    CompiledPlan plan;
    if (ends_with(o.input, ".json")) {
      try {
        plan = plan_from_json(read_file(o.input));
      } catch (const CompileError& e) {
        std::cerr << o.input << ": " << e.what() << "\n";
        throw Failure{kUsage};
      }
    } else {
      auto t = load_template(o.input, o.tables, std::cerr);
      auto r = propagate(t.program, *t.machine);
      print(std::cerr, r.diagnostics);
      out.code = exit_code(r.diagnostics, o.strict);
      if (has_errors(r.diagnostics)) {
        out.code = kErrors;
        return out;
      }
      plan = erase(r.annotated, t.machine->language());
    }
    try {
      auto p = execute_plan(plan, b);
      out.text = p.value.str();
      out.marks = std::move(p.marks);
      out.ok = true;
    } catch (const PlanError& e) {
      std::cerr << o.input << ": error: " << e.what() << "\n";
      out.code = kErrors;
    }
    return out;
  }
  if (o.mode != "dynamic") {
    std::cerr << "autoesc: --mode must be 'static' or 'dynamic'\n";
    throw Failure{kUsage};
  }
  if (ends_with(o.input, ".json")) {
    std::cerr << "autoesc: dynamic rendering needs a template, not a plan\n";
    throw Failure{kUsage};
  }
  auto t = load_template(o.input, o.tables, std::cerr);
  auto r = render(t.program, b, t.machine);
  print(std::cerr, r.diagnostics);
  out.code = exit_code(r.diagnostics, o.strict);
  if (!r.value) {
    out.code = kErrors;
    return out;
  }
  out.text = r.value->str();
  out.marks = std::move(r.marks);
  out.ok = true;
  return out;
}

int cmd_render(const Options& o) {
  auto r = do_render(o);
  if (!r.ok) return kErrors;
  std::string text = r.text;
  if (!o.translations.empty()) {
    try {
      text = translate_buffer(r.text, r.marks, bundle_from_json(read_file(o.translations)));
    } catch (const I18nError& e) {
      std::cerr << "autoesc: " << e.what() << "\n";
      return kErrors;
    }
  }
  write_output(o.out, text);
  return r.code;
}

int cmd_extract(const Options& o) {
  Options dyn = o;
  dyn.mode = "dynamic";
  auto r = do_render(dyn);
  if (!r.ok) return kErrors;
  try {
    write_output(o.out, bundle_to_json(extract_messages(r.text, r.marks).bundle));
  } catch (const I18nError& e) {
    std::cerr << o.input << ": error: " << e.what() << "\n";
    return kErrors;
  }
  return r.code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contextual autoescaping for tagged templates"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sub) {
    sub->add_flag("--strict", o.strict, "Treat warnings as errors");
    sub->add_option("--tables", o.tables, "Directory with transition table files");
  };

  auto* check = app.add_subcommand("check", "Report diagnostics for a template");
  check->add_option("template", o.input)->required();
  common(check);

  auto* compile = app.add_subcommand("compile", "Compile a template into a plan");
  compile->add_option("template", o.input)->required();
  compile->add_option("--out", o.out, "Plan output file (default: stdout)");
  common(compile);

  auto* render_cmd = app.add_subcommand("render", "Render a template or compiled plan");
  render_cmd->add_option("input", o.input, "Template, or plan .json with --mode static")->required();
  render_cmd->add_option("bindings", o.bindings, "Bindings JSON file")->required();
  render_cmd->add_option("--mode", o.mode, "static or dynamic")->check(CLI::IsMember({"static", "dynamic"}));
  render_cmd->add_option("--out", o.out, "Output file (default: stdout)");
  render_cmd->add_option("--translations", o.translations, "Message bundle JSON to apply");
  common(render_cmd);

  auto* extract = app.add_subcommand("extract", "Extract translatable messages as JSON");
  extract->add_option("template", o.input)->required();
  extract->add_option("bindings", o.bindings, "Bindings JSON file")->required();
  extract->add_option("--out", o.out, "Bundle output file (default: stdout)");
  common(extract);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*check) return cmd_check(o);
    if (*compile) return cmd_compile(o);
    if (*render_cmd) return cmd_render(o);
    if (*extract) return cmd_extract(o);
  } catch (const Failure& f) {
    return f.code;
  }
  return kUsage;
}
