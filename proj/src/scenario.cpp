#include "neurovm/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "neurovm/errors.hpp"

namespace neurovm {

using nlohmann::json;

namespace {

/// Typed access to one JSON object, tracking its path and rejecting unknown keys.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(path_, path_ + ": expected an object");
  }

  ~ObjectReader() = default;

  std::string field(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  bool has(std::string_view key) {
    seen_.insert(std::string(key));
    return j_.contains(key);
  }

  const json& at(std::string_view key) {
    if (!has(key)) throw ValidationError(field(key), field(key) + ": required field missing");
    return j_.at(std::string(key));
  }

  template <typename T>
  T get(std::string_view key) {
    const json& v = at(key);
    return convert<T>(v, field(key));
  }

  template <typename T>
  T get_or(std::string_view key, T fallback) {
    if (!has(key)) return fallback;
    return convert<T>(j_.at(std::string(key)), field(key));
  }

  /// Call after reading every known key.
  void finish() const {
    for (const auto& [k, _] : j_.items()) {
      if (!seen_.contains(k)) throw ValidationError(field(k), field(k) + ": unknown field");
    }
  }

  template <typename T>
  static T convert(const json& v, const std::string& f) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ValidationError(f, f + ": expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
      if (!v.is_number_unsigned()) throw ValidationError(f, f + ": expected a non-negative integer");
      return v.get<T>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ValidationError(f, f + ": expected an integer");
      return v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ValidationError(f, f + ": expected a number");
      return v.get<T>();
    } else {
      if (!v.is_string()) throw ValidationError(f, f + ": expected a string");
      return v.get<std::string>();
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

SimTime read_time(ObjectReader& r, std::string_view key, SimTime fallback) {
  return SimTime{r.get_or<std::int64_t>(key, fallback.count())};
}

ResourceVector read_resources(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  ResourceVector v;
  v.lut = r.get<std::int64_t>("lut");
  v.memory_bytes = r.get<std::int64_t>("memory_bytes");
  v.io_pins = r.get<std::int64_t>("io_pins");
  v.dsp = r.get<std::int64_t>("dsp");
  r.finish();
  return v;
}

json write_resources(const ResourceVector& v) {
  return {{"lut", v.lut}, {"memory_bytes", v.memory_bytes}, {"io_pins", v.io_pins}, {"dsp", v.dsp}};
}

template <typename Enum, std::size_t N>
Enum read_enum(const std::string& text, const std::string& field,
               const std::array<std::pair<std::string_view, Enum>, N>& table) {
  for (const auto& [name, value] : table) {
    if (name == text) return value;
  }
  std::string options;
  for (const auto& [name, _] : table) options += (options.empty() ? "" : "|") + std::string(name);
  throw ValidationError(field, field + ": '" + text + "' is not one of " + options);
}

constexpr std::array<std::pair<std::string_view, ModuleKind>, 3> kKinds{
    {{"LifCore", ModuleKind::LifCore}, {"Router", ModuleKind::Router},
     {"Pooling", ModuleKind::Pooling}}};
constexpr std::array<std::pair<std::string_view, Priority>, 2> kPriorities{
    {{"RealTime", Priority::RealTime}, {"Batch", Priority::Batch}}};
constexpr std::array<std::pair<std::string_view, ReconfigMode>, 2> kModes{
    {{"Full", ReconfigMode::Full}, {"Partial", ReconfigMode::Partial}}};
constexpr std::array<std::pair<std::string_view, Direction>, 2> kDirections{
    {{"In", Direction::In}, {"Out", Direction::Out}}};

const json& array_at(ObjectReader& r, std::string_view key, const json& empty) {
  if (!r.has(key)) return empty;
  const json& a = r.at(key);
  if (!a.is_array()) throw ValidationError(r.field(key), r.field(key) + ": expected an array");
  return a;
}

std::string indexed(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

/// Maps a byte offset in `text` to a 1-based (line, column).
std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

Scenario from_json(const json& root) {
  ObjectReader r(root, "");
  Scenario s;
  s.schema_version = r.get<int>("schema_version");
  if (s.schema_version != kScenarioSchemaVersion) {
    throw ValidationError("schema_version", "schema_version: unsupported version " +
                                                std::to_string(s.schema_version) + " (expected " +
                                                std::to_string(kScenarioSchemaVersion) + ")");
  }
  s.seed = r.get<std::uint64_t>("seed");
  s.duration = read_time(r, "duration_ns", s.duration);
  s.sample_period = read_time(r, "sample_period_ns", s.sample_period);

  if (r.has("fabric")) {
    ObjectReader f(r.at("fabric"), "fabric");
    if (f.has("total")) {
      s.fabric.total = read_resources(f.at("total"), "fabric.total");
      s.fabric.core_footprint = s.fabric.total.scaled(1, 32);
    }
    s.fabric.neurocore_count = f.get_or<std::uint32_t>("neurocore_count", s.fabric.neurocore_count);
    s.fabric.neurons_per_core =
        f.get_or<std::uint32_t>("neurons_per_core", s.fabric.neurons_per_core);
    if (f.has("core_footprint")) {
      s.fabric.core_footprint = read_resources(f.at("core_footprint"), "fabric.core_footprint");
    }
    s.fabric.bitstream_total_bytes =
        f.get_or<std::int64_t>("bitstream_total_bytes", s.fabric.bitstream_total_bytes);
    f.finish();
  }

  if (r.has("link")) {
    ObjectReader l(r.at("link"), "link");
    s.link.latency = read_time(l, "latency_ns", s.link.latency);
    s.link.ring_capacity = l.get_or<std::uint32_t>("ring_capacity", s.link.ring_capacity);
    if (l.has("peak_gibs")) {
      ObjectReader p(l.at("peak_gibs"), "link.peak_gibs");
      s.link.peak_gibs.clear();
      for (const auto& [k, v] : l.at("peak_gibs").items()) {
        const std::string f = "link.peak_gibs." + k;
        std::uint32_t n = 0;
        try {
          std::size_t used = 0;
          const unsigned long parsed = std::stoul(k, &used);
          if (used != k.size()) throw std::invalid_argument(k);
          n = static_cast<std::uint32_t>(parsed);
        } catch (const std::exception&) {
          throw ValidationError(f, f + ": key must be a VM count");
        }
        s.link.peak_gibs[n] = p.get<double>(k);
      }
      p.finish();
    }
    l.finish();
  }

  if (r.has("energy")) {
    ObjectReader e(r.at("energy"), "energy");
    s.energy.base_mj = e.get_or<double>("base_mj", s.energy.base_mj);
    s.energy.slope_mj = e.get_or<double>("slope_mj", s.energy.slope_mj);
    s.energy.dyn_nj_per_synop = e.get_or<double>("dyn_nj_per_synop", s.energy.dyn_nj_per_synop);
    e.finish();
  }

  if (r.has("reconfig")) {
    ObjectReader c(r.at("reconfig"), "reconfig");
    s.reconfig.config_port_bytes_per_s =
        c.get_or<double>("config_port_bytes_per_s", s.reconfig.config_port_bytes_per_s);
    s.reconfig.partial_setup = read_time(c, "partial_setup_ns", s.reconfig.partial_setup);
    c.finish();
  }

  if (r.has("scheduler")) {
    ObjectReader c(r.at("scheduler"), "scheduler");
    s.scheduler.tick = read_time(c, "tick_ns", s.scheduler.tick);
    s.scheduler.migration_penalty =
        read_time(c, "migration_penalty_ns", s.scheduler.migration_penalty);
    s.scheduler.core_rate = c.get_or<double>("core_rate_synops_per_ns", s.scheduler.core_rate);
    s.scheduler.migrations = c.get_or<bool>("migrations", s.scheduler.migrations);
    c.finish();
  }

  if (r.has("lif")) {
    ObjectReader c(r.at("lif"), "lif");
    s.lif.v_thresh = c.get_or<double>("v_thresh", s.lif.v_thresh);
    s.lif.v_reset = c.get_or<double>("v_reset", s.lif.v_reset);
    s.lif.leak = c.get_or<double>("leak", s.lif.leak);
    s.lif.dt = read_time(c, "dt_ns", s.lif.dt);
    c.finish();
  }

  const json empty = json::array();
  {
    const json& a = array_at(r, "modules", empty);
    for (std::size_t i = 0; i < a.size(); ++i) {
      ObjectReader m(a[i], indexed("modules", i));
      ModuleSpec spec;
      spec.name = m.get<std::string>("name");
      spec.kind = read_enum(m.get<std::string>("kind"), m.field("kind"), kKinds);
      spec.fraction = m.get<double>("fraction");
      m.finish();
      s.modules.push_back(spec);
    }
  }
  {
    const json& a = array_at(r, "vms", empty);
    for (std::size_t i = 0; i < a.size(); ++i) {
      ObjectReader v(a[i], indexed("vms", i));
      VmSpec spec;
      spec.name = v.get<std::string>("name");
      const bool has_fraction = v.has("fraction");
      const bool has_request = v.has("request");
      if (has_fraction == has_request) {
        throw ValidationError(v.field("fraction"),
                              v.field("fraction") + ": give exactly one of fraction or request");
      }
      if (has_fraction) {
        const double f = v.get<double>("fraction");
        if (!(f > 0.0 && f <= 1.0)) {
          throw ValidationError(v.field("fraction"), v.field("fraction") + ": must lie in (0,1]");
        }
        spec.request = s.fabric.total.fraction(f);
      } else {
        spec.request = read_resources(v.at("request"), v.field("request"));
      }
      spec.priority =
          read_enum(v.get_or<std::string>("priority", "Batch"), v.field("priority"), kPriorities);
      v.finish();
      s.vms.push_back(spec);
    }
  }
  {
    const json& a = array_at(r, "tasks", empty);
    for (std::size_t i = 0; i < a.size(); ++i) {
      ObjectReader t(a[i], indexed("tasks", i));
      TaskEntry e;
      e.name = t.get<std::string>("name");
      e.raw.shape.steps = t.get<std::uint64_t>("steps");
      e.raw.shape.input_rate = t.get<std::uint64_t>("input_rate");
      e.raw.shape.fan_in = t.get<std::uint64_t>("fan_in");
      e.raw.data_size = t.get_or<std::uint64_t>("data_size", 0);
      e.raw.arrival = read_time(t, "arrival_ns", SimTime{});
      if (t.has("deadline_ns")) e.raw.deadline = read_time(t, "deadline_ns", SimTime{});
      t.finish();
      s.tasks.push_back(e);
    }
  }
  {
    const json& a = array_at(r, "reconfigurations", empty);
    for (std::size_t i = 0; i < a.size(); ++i) {
      ObjectReader c(a[i], indexed("reconfigurations", i));
      ReconfigEntry e;
      e.at = read_time(c, "at_ns", SimTime{});
      e.vm = c.get<std::string>("vm");
      e.module = c.get<std::string>("module");
      e.mode = read_enum(c.get_or<std::string>("mode", "Partial"), c.field("mode"), kModes);
      c.finish();
      s.reconfigurations.push_back(e);
    }
  }
  {
    const json& a = array_at(r, "transfers", empty);
    for (std::size_t i = 0; i < a.size(); ++i) {
      ObjectReader c(a[i], indexed("transfers", i));
      TransferEntry e;
      e.at = read_time(c, "at_ns", SimTime{});
      e.vm = c.get<std::string>("vm");
      e.size = c.get<std::uint64_t>("size");
      e.direction =
          read_enum(c.get_or<std::string>("direction", "In"), c.field("direction"), kDirections);
      e.repeat = c.get_or<std::uint32_t>("repeat", 1);
      c.finish();
      s.transfers.push_back(e);
    }
  }
  r.finish();
  s.validate();
  return s;
}

template <typename Enum, std::size_t N>
std::string enum_name(Enum v, const std::array<std::pair<std::string_view, Enum>, N>& table) {
  for (const auto& [name, value] : table) {
    if (value == v) return std::string(name);
  }
  return {};
}

}  // namespace

std::vector<ModuleSpec> default_module_catalog() {
  return {{"lif_core", ModuleKind::LifCore, 0.10},
          {"pooling", ModuleKind::Pooling, 0.05},
          {"router", ModuleKind::Router, 0.025}};
}

Scenario Scenario::defaults() {
  Scenario s;
  s.modules = default_module_catalog();
  const ResourceVector eighth = s.fabric.total.scaled(1, 8);
  s.vms = {{"vm0", eighth, Priority::RealTime},
           {"vm1", eighth, Priority::RealTime},
           {"vm2", eighth, Priority::Batch},
           {"vm3", eighth, Priority::Batch}};
  for (std::uint32_t i = 0; i < 12; ++i) {
    TaskEntry t;
    t.name = "t" + std::to_string(i);
    t.raw.shape = {100, 8, i % 3 == 0 ? 256u : 64u};
    t.raw.data_size = 1 << 20;
    t.raw.arrival = SimTime::us(250 * i);
    if (i % 2 == 0) t.raw.deadline = t.raw.arrival + SimTime::ms(2);
    s.tasks.push_back(t);
  }
  for (std::uint32_t v = 0; v < 4; ++v) {
    s.transfers.push_back({SimTime{}, "vm" + std::to_string(v), 1 << 20, Direction::In, 8});
  }
  s.reconfigurations.push_back({SimTime::ms(5), "vm2", "lif_core", ReconfigMode::Partial});
  s.reconfigurations.push_back({SimTime::ms(20), "vm3", "pooling", ReconfigMode::Full});
  return s;
}

const ModuleSpec* Scenario::find_module(std::string_view name) const {
  auto it = std::find_if(modules.begin(), modules.end(),
                         [&](const ModuleSpec& m) { return m.name == name; });
  return it == modules.end() ? nullptr : &*it;
}

const VmSpec* Scenario::find_vm(std::string_view name) const {
  auto it = std::find_if(vms.begin(), vms.end(), [&](const VmSpec& v) { return v.name == name; });
  return it == vms.end() ? nullptr : &*it;
}

void Scenario::validate() const {
  auto check = [](const std::string& field, auto&& fn) {
    try {
      fn();
    } catch (const ValidationError&) {
      throw;
    } catch (const Error& e) {
      throw ValidationError(field, field + ": " + e.what());
    }
  };
  if (schema_version != kScenarioSchemaVersion) {
    throw ValidationError("schema_version", "schema_version: unsupported version");
  }
  if (duration.count() <= 0) throw ValidationError("duration_ns", "duration_ns: must be positive");
  if (sample_period.count() <= 0) {
    throw ValidationError("sample_period_ns", "sample_period_ns: must be positive");
  }
  check("fabric", [&] { fabric.validate(); });
  check("link", [&] { link.validate(); });
  check("energy", [&] { energy.validate(); });
  check("reconfig", [&] { reconfig.validate(); });
  check("scheduler", [&] { scheduler.validate(); });
  check("lif", [&] { lif.validate(); });

  std::set<std::string, std::less<>> names;
  for (std::size_t i = 0; i < modules.size(); ++i) {
    const std::string f = indexed("modules", i);
    if (!names.insert(modules[i].name).second) {
      throw ValidationError(f + ".name", f + ".name: duplicate module '" + modules[i].name + "'");
    }
    if (!(modules[i].fraction > 0.0 && modules[i].fraction <= 1.0)) {
      throw ValidationError(f + ".fraction", f + ".fraction: must lie in (0,1]");
    }
  }
  names.clear();
  ResourceVector requested;
  for (std::size_t i = 0; i < vms.size(); ++i) {
    const std::string f = indexed("vms", i);
    if (!names.insert(vms[i].name).second) {
      throw ValidationError(f + ".name", f + ".name: duplicate VM '" + vms[i].name + "'");
    }
    if (!vms[i].request.non_negative() || !vms[i].request.any_positive()) {
      throw ValidationError(f + ".request", f + ".request: must be non-negative and non-empty");
    }
    requested += vms[i].request;
    if (auto d = requested.first_deficit(fabric.total)) {
      throw ValidationError(f + ".request", f + ".request: VMs exceed the fabric in " +
                                                std::string(to_string(*d)));
    }
  }
  names.clear();
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const std::string f = indexed("tasks", i);
    const TaskEntry& t = tasks[i];
    if (!names.insert(t.name).second) {
      throw ValidationError(f + ".name", f + ".name: duplicate task '" + t.name + "'");
    }
    if (t.raw.shape.steps == 0 || t.raw.shape.input_rate == 0 || t.raw.shape.fan_in == 0) {
      throw ValidationError(f, f + ": steps, input_rate and fan_in must be positive");
    }
    if (t.raw.arrival.count() < 0) throw ValidationError(f + ".arrival_ns", f + ".arrival_ns: negative");
    if (t.raw.deadline && *t.raw.deadline <= t.raw.arrival) {
      throw ValidationError(f + ".deadline_ns", f + ".deadline_ns: must be after arrival");
    }
  }
  for (std::size_t i = 0; i < reconfigurations.size(); ++i) {
    const std::string f = indexed("reconfigurations", i);
    const ReconfigEntry& e = reconfigurations[i];
    const VmSpec* vm = find_vm(e.vm);
    if (vm == nullptr) throw ValidationError(f + ".vm", f + ".vm: unknown VM '" + e.vm + "'");
    const ModuleSpec* m = find_module(e.module);
    if (m == nullptr) {
      throw ValidationError(f + ".module", f + ".module: unknown module '" + e.module + "'");
    }
    if (!fabric.total.fraction(m->fraction).fits_within(vm->request)) {
      throw ValidationError(f + ".module", f + ".module: '" + e.module + "' does not fit VM '" +
                                               e.vm + "'");
    }
    if (e.at.count() < 0) throw ValidationError(f + ".at_ns", f + ".at_ns: negative");
  }
  for (std::size_t i = 0; i < transfers.size(); ++i) {
    const std::string f = indexed("transfers", i);
    const TransferEntry& e = transfers[i];
    if (find_vm(e.vm) == nullptr) {
      throw ValidationError(f + ".vm", f + ".vm: unknown VM '" + e.vm + "'");
    }
    if (e.size == 0) throw ValidationError(f + ".size", f + ".size: must be positive");
    if (e.repeat == 0) throw ValidationError(f + ".repeat", f + ".repeat: must be positive");
    if (e.at.count() < 0) throw ValidationError(f + ".at_ns", f + ".at_ns: negative");
  }
  if (!transfers.empty()) {
    check("link.peak_gibs", [&] { (void)link.peak_bw(static_cast<std::uint32_t>(vms.size())); });
  }
}

Scenario parse_scenario(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // nlohmann reports the offset one past the offending character.
    const auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError(line, col, e.what());
  }
  return from_json(root);
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read scenario " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string scenario_to_json(const Scenario& s) {
  json j;
  j["schema_version"] = s.schema_version;
  j["seed"] = s.seed;
  j["duration_ns"] = s.duration.count();
  j["sample_period_ns"] = s.sample_period.count();
  j["fabric"] = {{"total", write_resources(s.fabric.total)},
                 {"neurocore_count", s.fabric.neurocore_count},
                 {"neurons_per_core", s.fabric.neurons_per_core},
                 {"core_footprint", write_resources(s.fabric.core_footprint)},
                 {"bitstream_total_bytes", s.fabric.bitstream_total_bytes}};
  json peaks = json::object();
  for (const auto& [n, bw] : s.link.peak_gibs) peaks[std::to_string(n)] = bw;
  j["link"] = {{"latency_ns", s.link.latency.count()},
               {"ring_capacity", s.link.ring_capacity},
               {"peak_gibs", peaks}};
  j["energy"] = {{"base_mj", s.energy.base_mj},
                 {"slope_mj", s.energy.slope_mj},
                 {"dyn_nj_per_synop", s.energy.dyn_nj_per_synop}};
  j["reconfig"] = {{"config_port_bytes_per_s", s.reconfig.config_port_bytes_per_s},
                   {"partial_setup_ns", s.reconfig.partial_setup.count()}};
  j["scheduler"] = {{"tick_ns", s.scheduler.tick.count()},
                    {"migration_penalty_ns", s.scheduler.migration_penalty.count()},
                    {"core_rate_synops_per_ns", s.scheduler.core_rate},
                    {"migrations", s.scheduler.migrations}};
  j["lif"] = {{"v_thresh", s.lif.v_thresh},
              {"v_reset", s.lif.v_reset},
              {"leak", s.lif.leak},
              {"dt_ns", s.lif.dt.count()}};
  j["modules"] = json::array();
  for (const ModuleSpec& m : s.modules) {
    j["modules"].push_back(
        {{"name", m.name}, {"kind", enum_name(m.kind, kKinds)}, {"fraction", m.fraction}});
  }
  j["vms"] = json::array();
  for (const VmSpec& v : s.vms) {
    j["vms"].push_back({{"name", v.name},
                        {"request", write_resources(v.request)},
                        {"priority", enum_name(v.priority, kPriorities)}});
  }
  j["tasks"] = json::array();
  for (const TaskEntry& t : s.tasks) {
    json e = {{"name", t.name},
              {"steps", t.raw.shape.steps},
              {"input_rate", t.raw.shape.input_rate},
              {"fan_in", t.raw.shape.fan_in},
              {"data_size", t.raw.data_size},
              {"arrival_ns", t.raw.arrival.count()}};
    if (t.raw.deadline) e["deadline_ns"] = t.raw.deadline->count();
    j["tasks"].push_back(e);
  }
  j["reconfigurations"] = json::array();
  for (const ReconfigEntry& e : s.reconfigurations) {
    j["reconfigurations"].push_back({{"at_ns", e.at.count()},
                                     {"vm", e.vm},
                                     {"module", e.module},
                                     {"mode", enum_name(e.mode, kModes)}});
  }
  j["transfers"] = json::array();
  for (const TransferEntry& e : s.transfers) {
    j["transfers"].push_back({{"at_ns", e.at.count()},
                              {"vm", e.vm},
                              {"size", e.size},
                              {"direction", enum_name(e.direction, kDirections)},
                              {"repeat", e.repeat}});
  }
  return j.dump(2) + "\n";
}

}  // namespace neurovm
