#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "persist/automata.hpp"
#include "persist/chain.hpp"
#include "persist/chain_io.hpp"
#include "persist/error.hpp"
#include "persist/presets.hpp"
#include "persist/rules.hpp"
#include "persist/survival.hpp"
#include "persist/variance.hpp"
#include "persist/verify.hpp"

namespace persist {
namespace cli {

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    v.push_back(parse_number(tok, 0));
  }
  return v;
}

inline Rule parse_rule(const std::string& s) {
  if (s == "cca") return Rule::cca;
  if (s == "ghm") return Rule::ghm;
  if (s == "fca") return Rule::fca;
  throw Error(Errc::invalid_argument, "unknown rule '" + s + "'");
}

struct ModelArgs {
  std::string preset = "srw";
  std::string chain;
  double alpha = 0.75;
  std::string values;
  std::string probs;

  void attach(CLI::App* app) {
    auto* p = app->add_option("--preset", preset, "model preset")->check(CLI::IsMember(preset_names()));
    auto* c = app->add_option("--chain", chain, "chain-spec file");
    p->excludes(c);
    app->add_option("--alpha", alpha, "persistence parameter of the persistent preset");
    app->add_option("--values", values, "comma-separated step values of the iid preset");
    app->add_option("--probs", probs, "comma-separated step probabilities of the iid preset");
  }

  WalkModel build() const {
    if (!chain.empty()) return parse_chain_file(chain);
    PresetParams pp;
    pp.alpha = alpha;
    pp.values = parse_list(values);
    pp.probs = parse_list(probs);
    return build_preset(preset, pp);
  }

  void echo(std::vector<std::pair<std::string, std::string>>& h) const {
    if (!chain.empty()) {
      h.push_back({"chain", chain});
      return;
    }
    h.push_back({"preset", preset});
    if (preset == "persistent") h.push_back({"alpha", num(alpha)});
    if (preset == "iid") {
      h.push_back({"values", values});
      h.push_back({"probs", probs});
    }
  }
};

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(std::vector<std::string> args) {
    CLI::App app{"Persistence of Markov additive walks and 3-color cellular automata", "persist"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    auto common = [&](CLI::App* sub) {
      sub->add_option("--seed", seed_, "master seed");
      sub->add_option("--workers", workers_, "worker threads (0 = all cores); never changes the output");
      sub->add_option("--output", output_, "output file (default standard output)");
    };

    auto* gamma = app.add_subcommand("gamma", "limiting variance gamma^2");
    model_.attach(gamma);
    gamma->add_option("--method", method_, "exact, series, spectral or all")
        ->check(CLI::IsMember({"exact", "series", "spectral", "all"}));
    common(gamma);

    auto* surv = app.add_subcommand("survival", "Q(j,t) by dynamic programming");
    model_.attach(surv);
    surv->add_option("--level", level_, "integer level j");
    surv->add_option("--state", state_, "start state label (default stationary start)");
    surv->add_option("--t-max", t_max_, "last time")->required();
    surv->add_option("--every", every_, "print every k-th time");
    surv->add_option("--cap", cap_, "truncate levels above this cap");
    common(surv);

    auto* integ = app.add_subcommand("integrated", "integrated survival int_0^inf Q(-r,t) dr");
    model_.attach(integ);
    integ->add_option("--t-max", t_max_, "last time")->required();
    integ->add_option("--method", method_, "dp, mc or auto")->check(CLI::IsMember({"dp", "mc", "auto"}));
    integ->add_option("--samples", samples_, "Monte Carlo paths");
    integ->add_option("--every", every_, "print every k-th time");
    common(integ);

    auto* dual = app.add_subcommand("duality", "backward-walk duality gap");
    model_.attach(dual);
    dual->add_option("--r", r_, "level r > 0")->required();
    dual->add_option("--t-max", t_max_, "last time")->required();
    dual->add_option("--mode", method_, "exact, mc or auto")->check(CLI::IsMember({"exact", "mc", "auto"}));
    dual->add_option("--samples", samples_, "Monte Carlo paths");
    dual->add_option("--every", every_, "print every k-th time");
    common(dual);

    auto* ca = app.add_subcommand("ca", "density of disagreeing edges of a 3-color automaton");
    ca->add_option("--rule", rule_, "cca, ghm or fca")->check(CLI::IsMember({"cca", "ghm", "fca"}));
    ca->add_option("--n", n_, "ring size");
    ca->add_option("--t-max", t_max_, "last time")->required();
    ca->add_option("--replicas", replicas_, "independent rings");
    ca->add_option("--every", every_, "print every k-th time");
    ca->add_flag("--particles", particles_, "append the particle density columns");
    common(ca);

    auto* fit = app.add_subcommand("fit", "fit value ~ C t^-rho on a CSV series");
    fit->add_option("--input", input_, "CSV file (default standard input)");
    fit->add_option("--window", window_, "lo,hi")->delimiter(',')->expected(2)->required();
    fit->add_option("--mode", method_, "fixed or free")->check(CLI::IsMember({"fixed", "free"}));
    fit->add_option("--column", column_, "zero-based value column");
    fit->add_option("--stride", stride_, "keep rows with (t - offset) divisible by stride, indexed by (t - offset)/stride");
    fit->add_option("--offset", offset_, "time offset for --stride");
    fit->add_option("--output", output_, "output file (default standard output)");

    auto* ver = app.add_subcommand("verify", "run invariant suites");
    std::vector<std::string> suite_list{"all"};
    for (const auto& s : suites()) suite_list.push_back(s.first);
    ver->add_option("--suite", suite_, "suite name")->check(CLI::IsMember(suite_list));
    common(ver);

    try {
      std::reverse(args.begin(), args.end());
      app.parse(args);
    } catch (const CLI::CallForHelp&) {
      out_ << app.help();
      return 0;
    } catch (const CLI::CallForAllHelp&) {
      out_ << app.help("", CLI::AppFormatMode::All);
      return 0;
    } catch (const CLI::ParseError& e) {
      err_ << "error: PARSE_ERROR: " << e.what() << "\n";
      return 1;
    }

    try {
      std::ostringstream body;
      int code = 0;
      std::string name;
      if (*gamma) {
        name = "gamma";
        if (method_.empty()) method_ = "all";
        code = run_gamma(body);
      } else if (*surv) {
        name = "survival";
        code = run_survival(body);
      } else if (*integ) {
        name = "integrated";
        if (method_.empty()) method_ = "auto";
        code = run_integrated(body);
      } else if (*dual) {
        name = "duality";
        if (method_.empty()) method_ = "auto";
        code = run_duality(body);
      } else if (*ca) {
        name = "ca";
        code = run_ca(body);
      } else if (*fit) {
        name = "fit";
        if (method_.empty()) method_ = "fixed";
        code = run_fit(body);
      } else if (*ver) {
        name = "verify";
        code = run_verify(body);
      }
      emit(name, body.str());
      return code;
    } catch (const Error& e) {
      err_ << "error: " << e.what() << "\n";
      return is_numerical(e.code()) ? 2 : 1;
    } catch (const std::exception& e) {
      err_ << "error: " << e.what() << "\n";
      return 1;
    }
  }

 private:
  void header(const std::string& key, const std::string& value) { header_.push_back({key, value}); }

  void emit(const std::string& name, const std::string& body) {
    std::ostringstream text;
    text << "# persist " << name << "\n";
    for (const auto& [k, v] : header_) text << "# " << k << "=" << v << "\n";
    text << body;
    if (output_.empty()) {
      out_ << text.str();
    } else {
      std::ofstream f(output_, std::ios::binary);
      if (!f) throw Error(Errc::invalid_argument, "cannot open output file '" + output_ + "'");
      f << text.str();
    }
  }

  bool print_time(std::size_t t) const { return every_ <= 1 || t % every_ == 0 || t == t_max_; }

  int run_gamma(std::ostream& os) {
    auto model = model_.build();
    model_.echo(header_);
    header("method", method_);
    os << "method,gamma2,detail\n";
    auto row = [&](const std::string& m) {
      if (m == "exact") {
        auto r = gamma2_exact(model);
        os << "exact," << num(r.gamma2) << ",\n";
      } else if (m == "series") {
        auto r = gamma2_series(model);
        if (!r.converged) {
          if (method_ != "all") throw Error(Errc::no_convergence, "autocovariance series did not converge");
          os << "series,nan," << reason_code(Errc::no_convergence) << "\n";
          return;
        }
        os << "series," << num(r.gamma2) << "," << csv_field("lags=" + std::to_string(r.lags) + " tail=" + num(r.tail_bound)) << "\n";
      } else {
        try {
          auto r = gamma2_spectral(model);
          os << "spectral," << num(r.gamma2) << "," << csv_field("condition=" + num(r.conditioning)) << "\n";
        } catch (const Error& e) {
          if (method_ != "all" || !is_numerical(e.code())) throw;
          os << "spectral,nan," << reason_code(e.code()) << "\n";
        }
      }
    };
    if (method_ == "all") {
      for (const char* m : {"exact", "series", "spectral"}) row(m);
    } else {
      row(method_);
    }
    return 0;
  }

  int run_survival(std::ostream& os) {
    auto model = model_.build();
    model_.echo(header_);
    header("level", std::to_string(level_));
    header("state", state_.empty() ? "stationary" : state_);
    header("t_max", std::to_string(t_max_));
    header("every", std::to_string(every_));
    if (cap_) header("cap", std::to_string(*cap_));
    int x = -1;
    if (!state_.empty()) {
      x = model.state_index(state_);
      if (x < 0) throw Error(Errc::invalid_argument, "unknown state '" + state_ + "'");
    }
    auto tab = survival_dp(model, level_, level_, t_max_, cap_);
    os << "t,value,stderr\n";
    for (std::size_t t = 0; t <= t_max_; ++t) {
      if (!print_time(t)) continue;
      double v = x < 0 ? tab.marginal(level_, t) : tab.at(static_cast<std::size_t>(x), level_, t);
      os << t << "," << num(v) << ",0\n";
    }
    return 0;
  }

  int run_integrated(std::ostream& os) {
    auto model = model_.build();
    std::string method = method_;
    if (method == "auto") method = model.integer_valued ? "dp" : "mc";
    model_.echo(header_);
    header("method", method);
    header("t_max", std::to_string(t_max_));
    header("every", std::to_string(every_));
    if (method == "mc") {
      header("samples", std::to_string(samples_));
      header("seed", std::to_string(seed_));
    }
    if (t_max_ < 1) throw Error(Errc::invalid_argument, "t-max must be at least 1");
    os << "t,value,stderr\n";
    if (method == "dp") {
      auto v = integrated_survival_dp(model, t_max_);
      for (std::size_t t = 1; t <= t_max_; ++t)
        if (print_time(t)) os << t << "," << num(v[t - 1]) << ",0\n";
    } else {
      McOptions mo{samples_, SeedSpec{seed_}, workers_};
      auto v = integrated_survival_mc(model, t_max_, mo);
      for (std::size_t t = 1; t <= t_max_; ++t)
        if (print_time(t)) os << t << "," << num(v[t - 1].value) << "," << num(v[t - 1].stderr_) << "\n";
    }
    return 0;
  }

  int run_duality(std::ostream& os) {
    auto model = model_.build();
    DualityMode mode = method_ == "exact" ? DualityMode::exact : method_ == "mc" ? DualityMode::mc : DualityMode::automatic;
    model_.echo(header_);
    header("r", num(r_));
    header("t_max", std::to_string(t_max_));
    header("mode", method_);
    header("every", std::to_string(every_));
    if (mode != DualityMode::exact) {
      header("samples", std::to_string(samples_));
      header("seed", std::to_string(seed_));
    }
    os << "t,value,stderr,rhs_t,rhs_t_minus_1,r,mode\n";
    McOptions mo{samples_, SeedSpec{seed_}, workers_};
    for (std::size_t t = 1; t <= t_max_; ++t) {
      if (!print_time(t)) continue;
      auto d = duality_gap(model, r_, t, mode, mo);
      os << t << "," << num(d.lhs) << "," << num(d.lhs_stderr) << "," << num(d.rhs_t) << "," << num(d.rhs_t_minus_1) << ","
         << num(r_) << "," << (d.exact ? "exact" : "mc") << "\n";
    }
    return 0;
  }

  int run_ca(std::ostream& os) {
    Rule rule = parse_rule(rule_);
    header("rule", rule_);
    header("n", std::to_string(n_));
    header("t_max", std::to_string(t_max_));
    header("replicas", std::to_string(replicas_));
    header("every", std::to_string(every_));
    header("particles", particles_ ? "1" : "0");
    header("seed", std::to_string(seed_));
    auto s = density_curve(rule, n_, t_max_, replicas_, SeedSpec{seed_}, workers_);
    os << (particles_ ? "t,density,stderr,particles,particles_stderr\n" : "t,density,stderr\n");
    for (const auto& p : s.points) {
      if (!print_time(p.t)) continue;
      os << p.t << "," << num(p.density) << "," << num(p.stderr_);
      if (particles_) os << "," << num(p.particles) << "," << num(p.particles_stderr);
      os << "\n";
    }
    return 0;
  }

  int run_fit(std::ostream& os) {
    header("input", input_.empty() ? "-" : input_);
    header("window", num(window_[0]) + "," + num(window_[1]));
    header("mode", method_);
    header("column", std::to_string(column_));
    header("stride", std::to_string(stride_));
    header("offset", num(offset_));
    if (stride_ < 1) throw Error(Errc::invalid_argument, "stride must be at least 1");
    std::unique_ptr<std::ifstream> file;
    std::istream* in = &std::cin;
    if (!input_.empty() && input_ != "-") {
      file = std::make_unique<std::ifstream>(input_);
      if (!*file) throw Error(Errc::invalid_argument, "cannot open input file '" + input_ + "'");
      in = file.get();
    }
    if (stdin_override_) in = stdin_override_;
    auto series = read_series(*in);
    auto f = sqrt_fit(series, window_[0], window_[1], method_ == "free" ? FitMode::free_exponent : FitMode::fixed_half);
    os << "C,rho,window_lo,window_hi,residual\n";
    os << num(f.C) << "," << num(f.rho.value_or(0.5)) << "," << num(f.window_lo) << "," << num(f.window_hi) << ","
       << num(f.residual) << "\n";
    return 0;
  }

  std::vector<SeriesPoint> read_series(std::istream& in) const {
    std::vector<SeriesPoint> series;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      std::vector<std::string> cells;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      double t = 0;
      try {
        t = parse_number(cells.at(0), lineno);
      } catch (const Error&) {
        if (series.empty()) continue;  // column header
        throw;
      } catch (const std::out_of_range&) {
        continue;
      }
      if (column_ >= cells.size())
        throw Error(Errc::parse_error, "line " + std::to_string(lineno) + " has no column " + std::to_string(column_), lineno);
      double v = parse_number(cells[column_], lineno);
      double shifted = t - offset_;
      if (shifted < 0) continue;
      double k = shifted / static_cast<double>(stride_);
      if (std::abs(k - std::round(k)) > 1e-9) continue;
      series.push_back({std::round(k), v, 0});
    }
    return series;
  }

  int run_verify(std::ostream& os) {
    header("suite", suite_);
    header("seed", std::to_string(seed_));
    VerifyOptions vo;
    vo.seed = SeedSpec{seed_};
    vo.workers = workers_;
    auto results = run_suite(suite_, vo);
    os << "name,status,detail\n";
    std::size_t failed = 0;
    for (const auto& r : results) {
      os << csv_field(r.name) << "," << status_name(r.status) << "," << csv_field(r.detail) << "\n";
      failed += r.status == Status::fail;
    }
    if (failed) err_ << "verify: " << failed << " check(s) failed\n";
    return failed ? 1 : 0;
  }

 public:
  // Test hook: read fit input from this stream instead of standard input.
  std::istream* stdin_override_ = nullptr;

 private:
  std::ostream& out_;
  std::ostream& err_;
  std::vector<std::pair<std::string, std::string>> header_;
  ModelArgs model_;
  std::uint64_t seed_ = 1;
  unsigned workers_ = 1;
  std::string output_;
  std::string method_;
  int level_ = 0;
  std::string state_;
  std::size_t t_max_ = 0;
  std::size_t every_ = 1;
  std::optional<int> cap_;
  std::size_t samples_ = 1000000;
  double r_ = 1;
  std::string rule_ = "cca";
  std::size_t n_ = 1 << 20;
  std::size_t replicas_ = 4;
  bool particles_ = false;
  std::string input_;
  std::vector<double> window_;
  std::size_t column_ = 1;
  std::size_t stride_ = 1;
  double offset_ = 0;
  std::string suite_ = "all";
};

}  // namespace cli

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
                   std::istream* in = nullptr) {
  cli::Runner runner(out, err);
  runner.stdin_override_ = in;
  return runner.run(args);
}

}  // namespace persist
