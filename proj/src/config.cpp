#include "kmc/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "kmc/errors.hpp"

namespace kmc {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Cursor {
  std::string origin;
  int line = 0;
  std::string section;
  std::string key;

  [[noreturn]] void fail(const std::string& what) const {
    std::string where = origin + ":" + std::to_string(line) + ": ";
    if (!key.empty()) where += "key '" + key + "' in [" + section + "]: ";
    throw ConfigError(where + what);
  }

  double number(const std::string& v) const {
    try {
      std::size_t used = 0;
      const double x = std::stod(v, &used);
      if (used != v.size()) fail("expected a number, got '" + v + "'");
      return x;
    } catch (const ConfigError&) {
      throw;
    } catch (...) {
      fail("expected a number, got '" + v + "'");
    }
  }

  long long integer(const std::string& v) const {
    try {
      std::size_t used = 0;
      const long long x = std::stoll(v, &used);
      if (used != v.size()) fail("expected an integer, got '" + v + "'");
      return x;
    } catch (const ConfigError&) {
      throw;
    } catch (...) {
      fail("expected an integer, got '" + v + "'");
    }
  }

  std::uint64_t counter(const std::string& v) const {
    const long long x = integer(v);
    if (x < 0) fail("expected a nonnegative integer, got '" + v + "'");
    return static_cast<std::uint64_t>(x);
  }
};

Grid parse_grid(const Cursor& c, const std::string& v) {
  // start:stop:count uniform spec, or a comma list of times.
  if (v.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(v);
    while (std::getline(in, item, ':')) parts.push_back(trim(item));
    if (parts.size() != 3) c.fail("uniform grid spec is start:stop:count");
    const double t0 = c.number(parts[0]);
    const double t1 = c.number(parts[1]);
    const long long count = c.integer(parts[2]);
    if (count < 1) c.fail("grid count must be >= 1");
    return Grid::uniform(t0, t1, static_cast<int>(count));
  }
  std::vector<double> times;
  for (const std::string& tok : split_list(v)) times.push_back(c.number(tok));
  if (times.empty()) c.fail("grid list is empty");
  return Grid::list(std::move(times));
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
  ExperimentConfig cfg;
  Cursor cur;
  cur.origin = origin;

  std::string obs_kind = "coverage";
  int obs_target = 1;
  int obs_r = 1;

  std::istringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    ++cur.line;
    cur.key.clear();
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') cur.fail("unterminated section header");
      cur.section = trim(line.substr(1, line.size() - 2));
      if (cur.section != "model" && cur.section != "lattice" && cur.section != "observable" &&
          cur.section != "perturbation" && cur.section != "coupling" && cur.section != "run" &&
          cur.section != "output")
        cur.fail("unknown section [" + cur.section + "]");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) cur.fail("expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) cur.fail("empty key");
    if (val.empty()) cur.fail("empty value for key '" + key + "'");
    if (cur.section.empty()) cur.fail("key '" + key + "' appears before any section");
    cur.key = key;

    if (cur.section == "model") {
      if (key == "kind") {
        if (val == "ising_ad") cfg.model_kind = ModelKind::ising_ad;
        else if (val == "ad_diffusion") cfg.model_kind = ModelKind::ad_diffusion;
        else if (val == "zgb") cfg.model_kind = ModelKind::zgb;
        else if (val == "evans_co") cfg.model_kind = ModelKind::evans_co;
        else cur.fail("unknown model kind '" + val + "'");
      } else if (auto p = parse_param(key)) {
        cfg.params.set(*p, cur.number(val));
      } else {
        cur.fail("unknown key");
      }
    } else if (cur.section == "lattice") {
      if (key == "sites") {
        cfg.rows = 1;
        cfg.cols = static_cast<int>(cur.integer(val));
      } else if (key == "rows") {
        cfg.rows = static_cast<int>(cur.integer(val));
      } else if (key == "cols") {
        cfg.cols = static_cast<int>(cur.integer(val));
      } else {
        cur.fail("unknown key");
      }
    } else if (cur.section == "observable") {
      if (key == "kind") {
        if (val != "coverage" && val != "species_coverage" && val != "hamiltonian" &&
            val != "pair_correlation")
          cur.fail("unknown observable kind '" + val + "'");
        obs_kind = val;
      } else if (key == "target") {
        obs_target = static_cast<int>(cur.integer(val));
      } else if (key == "r") {
        obs_r = static_cast<int>(cur.integer(val));
        if (obs_r < 1) cur.fail("pair offset r must be >= 1");
      } else if (key == "partition") {
        try {
          cfg.partition = Partition::parse(val);
        } catch (const ConfigError& e) {
          cur.fail(e.what());
        }
      } else {
        cur.fail("unknown key");
      }
    } else if (cur.section == "perturbation") {
      if (key == "param") {
        auto p = parse_param(val);
        if (!p) cur.fail("unknown parameter '" + val + "'");
        cfg.perturb_param = *p;
      } else if (key == "epsilon") {
        cfg.epsilon = cur.number(val);
      } else {
        cur.fail("unknown key");
      }
    } else if (cur.section == "coupling") {
      if (key == "scheme") {
        cfg.scheme_kinds.clear();
        for (const std::string& tok : split_list(val)) {
          auto s = CouplingScheme::parse(tok);
          if (!s) cur.fail("unknown scheme '" + tok + "'");
          cfg.scheme_kinds.push_back(s->kind);
        }
        if (cfg.scheme_kinds.empty()) cur.fail("empty scheme list");
      } else if (key == "q") {
        cfg.q_list.clear();
        for (const std::string& tok : split_list(val)) {
          const long long q = cur.integer(tok);
          if (q < 0) cur.fail("q must be >= 0");
          cfg.q_list.push_back(static_cast<int>(q));
        }
      } else {
        cur.fail("unknown key");
      }
    } else if (cur.section == "run") {
      if (key == "t") {
        cfg.grid = parse_grid(cur, val);
        cfg.grid_set = true;
      } else if (key == "samples") {
        cfg.samples = cur.counter(val);
      } else if (key == "seed") {
        cfg.seed = cur.counter(val);
      } else if (key == "workers") {
        const long long w = cur.integer(val);
        if (w < 1) cur.fail("workers must be >= 1");
        cfg.workers = static_cast<int>(w);
      } else if (key == "shard") {
        cfg.shard = cur.counter(val);
        if (cfg.shard == 0) cur.fail("shard size must be >= 1");
      } else if (key == "rebuild") {
        cfg.rebuild = cur.counter(val);
        if (cfg.rebuild == 0) cur.fail("rebuild interval must be >= 1");
      } else if (key == "initial") {
        if (val != "empty" && val != "full") cur.fail("initial must be empty or full");
        cfg.initial = val;
      } else if (key == "repeats") {
        const long long r = cur.integer(val);
        if (r < 1) cur.fail("repeats must be >= 1");
        cfg.repeats = static_cast<int>(r);
      } else {
        cur.fail("unknown key");
      }
    } else if (cur.section == "output") {
      if (key == "dir") cfg.out_dir = val;
      else if (key == "prefix") cfg.prefix = val;
      else cur.fail("unknown key");
    }
  }

  if (cfg.cols <= 0)
    throw ConfigError(origin + ": [lattice] needs sites = N or rows/cols");
  if (cfg.rows <= 0) throw ConfigError(origin + ": [lattice] rows must be >= 1");

  const Species vac = 0;
  if (obs_kind == "coverage") cfg.observable = Observable::coverage(vac);
  else if (obs_kind == "species_coverage")
    cfg.observable = Observable::species_coverage(static_cast<Species>(obs_target), vac);
  else if (obs_kind == "hamiltonian")
    cfg.observable = Observable::hamiltonian(cfg.params.get(Param::J), cfg.params.get(Param::h), vac);
  else cfg.observable = Observable::pair_correlation(obs_r, vac);
  if (cfg.scheme_kinds.empty()) cfg.scheme_kinds.push_back(SchemeKind::uncoupled);
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

Lattice ExperimentConfig::lattice() const {
  return rows == 1 ? Lattice::line(cols) : Lattice::grid(rows, cols);
}

Model ExperimentConfig::nominal_model() const { return Model(model_kind, lattice(), params); }

Model ExperimentConfig::perturbed_model() const {
  return nominal_model().with_params(perturb(params, {perturb_param, epsilon}));
}

Configuration ExperimentConfig::initial_configuration() const {
  const Model m = nominal_model();
  Configuration c(lattice(), m.species().vacant);
  if (initial == "full") {
    // Fill with the single-site adsorbing species: 1 for the lattice-gas
    // models, CO (-1) for the surface-reaction models.
    const Species s = (model_kind == ModelKind::zgb || model_kind == ModelKind::evans_co)
                          ? static_cast<Species>(-1)
                          : static_cast<Species>(1);
    for (SiteIndex x = 0; x < c.size(); ++x) c[x] = s;
  }
  return c;
}

int ExperimentConfig::resolved_workers() const {
  if (workers > 0) return workers;
  if (const char* env = std::getenv("KMCSENS_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w >= 1) return w;
    } catch (...) {
    }
    throw ConfigError("KMCSENS_WORKERS must be a positive integer");
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::vector<CouplingScheme> ExperimentConfig::schemes() const {
  std::vector<CouplingScheme> out;
  for (SchemeKind k : scheme_kinds) {
    if (k == SchemeKind::coarse) {
      bool any = false;
      for (int q : q_list)
        if (q > 0) {
          out.push_back(CouplingScheme{k, q});
          any = true;
        }
      if (!any)
        throw ConfigError("[coupling] scheme 'coarse' needs a q list with positive entries");
    } else {
      out.push_back(CouplingScheme{k, 0});
    }
  }
  return out;
}

}  // namespace kmc
