#include "forge/core/error.hpp"
#include "forge/metrics/metrics.hpp"

#include <iomanip>
#include <sstream>

namespace forge::metrics {

namespace {

void put(nlohmann::ordered_json& j, const char* key, const std::optional<double>& v) {
  if (v) j[key] = *v;
}

std::optional<double> get(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

// Running mean over the values that are present.
struct Mean {
  double sum = 0.0;
  int n = 0;
  void add(const std::optional<double>& v) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  std::optional<double> value() const { return n ? std::optional<double>(sum / n) : std::nullopt; }
};

}  // namespace

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json cls = nlohmann::ordered_json::object();
  for (const auto& [id, name] : classes) cls[std::to_string(id)] = name;
  j["classes"] = cls;
  j["instance_classes"] = instance_classes;
  j["samples"] = samples;

  nlohmann::ordered_json sem = nlohmann::ordered_json::object();
  for (const auto& [id, s] : semantic) {
    nlohmann::ordered_json e;
    put(e, "iou", s.iou);
    put(e, "precision", s.precision);
    put(e, "recall", s.recall);
    put(e, "f1", s.f1);
    e["support"] = s.support;
    sem[std::to_string(id)] = e;
  }
  nlohmann::ordered_json semantic_j = {{"per_class", sem}};
  put(semantic_j, "miou", miou);
  j["semantic"] = semantic_j;

  nlohmann::ordered_json inst = nlohmann::ordered_json::object();
  for (const auto& [id, s] : instance) {
    inst[std::to_string(id)] = {{"gt_instances", s.gt_instances}, {"predictions", s.predictions}, {"ap25", s.ap25},
                                {"ap50", s.ap50},                 {"ap", s.ap},                   {"ap_by_threshold", s.ap_by_threshold}};
  }
  nlohmann::ordered_json instance_j = {{"per_class", inst}};
  put(instance_j, "ap25", ap25);
  put(instance_j, "ap50", ap50);
  put(instance_j, "ap", ap);
  j["instance"] = instance_j;
  if (wall_seconds) j["wall_seconds"] = *wall_seconds;
  if (throughput) j["throughput"] = *throughput;
  return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  EvalReport r;
  try {
    for (const auto& [k, v] : j.at("classes").items()) r.classes[std::stoi(k)] = v.get<std::string>();
    r.instance_classes = j.at("instance_classes").get<std::vector<int>>();
    r.samples = j.at("samples").get<std::size_t>();
    const auto& sem = j.at("semantic");
    for (const auto& [k, v] : sem.at("per_class").items()) {
      ClassScores s;
      s.iou = get(v, "iou");
      s.precision = get(v, "precision");
      s.recall = get(v, "recall");
      s.f1 = get(v, "f1");
      s.support = v.at("support").get<std::uint64_t>();
      r.semantic[std::stoi(k)] = s;
    }
    r.miou = get(sem, "miou");
    const auto& inst = j.at("instance");
    for (const auto& [k, v] : inst.at("per_class").items()) {
      InstanceClassScores s;
      s.gt_instances = v.at("gt_instances").get<std::size_t>();
      s.predictions = v.at("predictions").get<std::size_t>();
      s.ap25 = v.at("ap25").get<double>();
      s.ap50 = v.at("ap50").get<double>();
      s.ap = v.at("ap").get<double>();
      s.ap_by_threshold = v.value("ap_by_threshold", std::vector<double>{});
      r.instance[std::stoi(k)] = s;
    }
    r.ap25 = get(inst, "ap25");
    r.ap50 = get(inst, "ap50");
    r.ap = get(inst, "ap");
    r.wall_seconds = get(j, "wall_seconds");
    r.throughput = get(j, "throughput");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaError, std::string("report: ") + e.what());
  } catch (const std::logic_error&) {
    fail(ErrorCode::SchemaError, "report: class keys must be integers");
  }
  return r;
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out << std::setprecision(6) << std::fixed;
  const auto cell = [&](const std::optional<double>& v) {
    out << ',';
    if (v) out << *v;
  };
  out << "class_id,name,iou,precision,recall,f1,ap25,ap50,ap\n";
  for (const auto& [id, name] : classes) {
    out << id << ',' << name;
    const auto s = semantic.find(id);
    const ClassScores none;
    const ClassScores& sc = s == semantic.end() ? none : s->second;
    cell(sc.iou);
    cell(sc.precision);
    cell(sc.recall);
    cell(sc.f1);
    const auto i = instance.find(id);
    if (i == instance.end()) {
      out << ",,,";
    } else {
      cell(i->second.ap25);
      cell(i->second.ap50);
      cell(i->second.ap);
    }
    out << '\n';
  }
  out << "mean,";
  cell(miou);
  out << ",,,";
  cell(ap25);
  cell(ap50);
  cell(ap);
  out << '\n';
  return out.str();
}

EvalReport make_report(const std::map<int, std::string>& classes, const std::vector<int>& instance_classes,
                       std::size_t samples, const std::optional<SemanticResult>& semantic,
                       const std::optional<InstanceResult>& instance) {
  EvalReport r;
  r.classes = classes;
  r.instance_classes = instance_classes;
  r.samples = samples;
  if (semantic) {
    r.semantic = semantic->per_class;
    r.miou = semantic->miou;
  }
  if (instance) {
    r.instance = instance->per_class;
    r.ap25 = instance->ap25;
    r.ap50 = instance->ap50;
    r.ap = instance->ap;
  }
  return r;
}

EvalReport aggregate(const std::vector<EvalReport>& reports) {
  if (reports.empty()) fail(ErrorCode::InvalidArgument, "nothing to aggregate");
  const auto& first = reports.front();
  for (const auto& r : reports) {
    if (r.classes != first.classes || r.instance_classes != first.instance_classes) {
      fail(ErrorCode::SchemaError, "reports do not share a class map");
    }
  }
  EvalReport out;
  out.classes = first.classes;
  out.instance_classes = first.instance_classes;
  bool timed = true;
  double wall = 0.0;
  Mean miou, ap25, ap50, ap;
  std::map<int, std::array<Mean, 4>> sem;
  std::map<int, std::array<Mean, 3>> inst;
  std::map<int, std::vector<Mean>> by_t;
  for (const auto& r : reports) {
    out.samples += r.samples;
    if (r.wall_seconds) {
      wall += *r.wall_seconds;
    } else {
      timed = false;
    }
    miou.add(r.miou);
    ap25.add(r.ap25);
    ap50.add(r.ap50);
    ap.add(r.ap);
    for (const auto& [c, s] : r.semantic) {
      auto& m = sem[c];
      m[0].add(s.iou);
      m[1].add(s.precision);
      m[2].add(s.recall);
      m[3].add(s.f1);
      out.semantic[c].support += s.support;
    }
    for (const auto& [c, s] : r.instance) {
      auto& m = inst[c];
      m[0].add(s.ap25);
      m[1].add(s.ap50);
      m[2].add(s.ap);
      out.instance[c].gt_instances += s.gt_instances;
      out.instance[c].predictions += s.predictions;
      auto& t = by_t[c];
      if (t.size() < s.ap_by_threshold.size()) t.resize(s.ap_by_threshold.size());
      for (std::size_t k = 0; k < s.ap_by_threshold.size(); ++k) t[k].add(s.ap_by_threshold[k]);
    }
  }
  for (auto& [c, s] : out.semantic) {
    s.iou = sem[c][0].value();
    s.precision = sem[c][1].value();
    s.recall = sem[c][2].value();
    s.f1 = sem[c][3].value();
  }
  for (auto& [c, s] : out.instance) {
    s.ap25 = *inst[c][0].value();
    s.ap50 = *inst[c][1].value();
    s.ap = *inst[c][2].value();
    for (const auto& m : by_t[c]) s.ap_by_threshold.push_back(m.value().value_or(0.0));
  }
  out.miou = miou.value();
  out.ap25 = ap25.value();
  out.ap50 = ap50.value();
  out.ap = ap.value();
  if (timed) {
    out.wall_seconds = wall;
    if (wall > 0.0) out.throughput = static_cast<double>(out.samples) / wall;
  }
  return out;
}

}  // namespace forge::metrics
