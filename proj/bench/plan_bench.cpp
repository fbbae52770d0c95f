// Times compiled-plan rendering of the list template against hand-written
// concatenation with the same escapers, and the parallel batch executor
// against its serial reference.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "autoesc/compiler.hpp"
#include "autoesc/escapers.hpp"
#include "autoesc/template.hpp"
#include "autoesc/web.hpp"

using namespace autoesc;
using Clock = std::chrono::steady_clock;

namespace {

const char* kTemplate =
    "tag: html\n"
    "\"<ul>\n"
    ":for (let item of items) {\n"
    "  \"  <li><a href=${item.url}>${item.label}</a></li>\n"
    ":}\n"
    "\"</ul>\n";

Bindings make_items(int n) {
  Value::List items;
  for (int i = 0; i < n; ++i) {
    Value::Record r;
    r["url"] = Value::text(i % 7 == 0 ? "javascript:alert(" + std::to_string(i) + ")"
                                      : "https://example.com/item?id=" + std::to_string(i) + "&x=\"y\"");
    r["label"] = Value::text("Item <" + std::to_string(i) + "> & friends");
    items.push_back(Value::record(std::move(r)));
  }
  Value::Record root;
  root["items"] = Value::list(std::move(items));
  return Bindings(std::move(root));
}

std::string naive(const Bindings& b) {
  std::string out = "<ul>\n";
  for (const auto& item : b.lookup("items")->items()) {
    const auto& f = item.fields();
    out += "  <li><a href=\"";
    out += escape_html_attr(Value::text(filter_url_prefix(f.at("url"))));
    out += "\">";
    out += escape_pcdata(f.at("label"));
    out += "</a></li>\n";
  }
  out += "</ul>\n";
  return out;
}

template <class F>
double best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    auto t0 = Clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(Clock::now() - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  int items = argc > 1 ? std::atoi(argv[1]) : 10000;
  int docs = argc > 2 ? std::atoi(argv[2]) : 64;

  auto ir = parse_template(kTemplate, "list.tmpl");
  auto prop = propagate(desugar(*ir.ir), *html_machine());
  CompiledPlan plan = erase(prop.annotated, "html");
  Bindings b = make_items(items);

  if (execute_plan(plan, b).value.str() != naive(b)) {
    std::fprintf(stderr, "plan output differs from hand-written output\n");
    return 1;
  }
  double t_plan = best_of(7, [&] { (void)execute_plan(plan, b); });
  double t_naive = best_of(7, [&] { (void)naive(b); });
  std::printf("items=%d plan=%.3fms naive=%.3fms ratio=%.2f\n", items, t_plan * 1e3, t_naive * 1e3,
              t_plan / t_naive);

  std::vector<Bindings> batch;
  for (int i = 0; i < docs; ++i) batch.push_back(make_items(items / 10 + i));
  double t_par = best_of(3, [&] { (void)execute_plan_batch(plan, batch); });
  double t_ser = best_of(3, [&] { (void)execute_plan_batch_serial(plan, batch); });
  std::printf("batch docs=%d parallel=%.3fms serial=%.3fms speedup=%.2f\n", docs, t_par * 1e3, t_ser * 1e3,
              t_ser / t_par);
  return 0;
}
