#include "ledger.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"

namespace sbdc {

using nlohmann::json;

const char* task_status_name(TaskStatus s) {
    switch (s) {
        case TaskStatus::InFlight: return "in_flight";
        case TaskStatus::Completed: return "completed";
        case TaskStatus::Missed: return "missed";
    }
    return "?";
}

double NodeEnergyAccount::residual_J() const {
    const double delta_J = (final_soc_Wh - initial_soc_Wh) * 3600.0;
    return delta_J - integral_J - (clamp_deficit_J - clamp_surplus_J);
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

double percentile_nearest_rank(std::vector<double> values, double q) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t idx = static_cast<std::size_t>(
        std::min<double>(values.size() - 1,
                         std::max(0.0, std::ceil(q * static_cast<double>(values.size())) - 1.0)));
    return values[idx];
}

}  // namespace

std::string MetricsLedger::tasks_csv() const {
    std::ostringstream out;
    out << "task_id,class,origin_node,origin_cohort,arrival_s,materialized_s,exec_node,"
           "exec_start_s,exec_end_s,completion_s,deadline_s,status,latency_s,migrations,"
           "replicas,input_bits,output_bits,detail\n";
    for (const auto& t : tasks) {
        out << t.id << ',' << task_class_name(t.cls) << ',' << t.origin_node << ','
            << t.origin_cohort << ',' << fmt(t.arrival_s) << ',' << fmt(t.materialized_s) << ','
            << t.exec_node << ',' << fmt(t.exec_start_s) << ',' << fmt(t.exec_end_s) << ','
            << fmt(t.completion_s) << ',' << fmt(t.deadline_s) << ',' << task_status_name(t.status)
            << ',' << fmt(t.latency_s) << ',' << t.migrations << ',' << t.replicas << ','
            << fmt(t.input_bits) << ',' << fmt(t.output_bits) << ',' << t.detail << '\n';
    }
    return out.str();
}

std::string MetricsLedger::energy_csv() const {
    std::ostringstream out;
    out << "time_s,node_id,soc_Wh,temperature_K,zone,harvest_W,load_W\n";
    for (const auto& e : energy) {
        out << fmt(e.t_s) << ',' << e.node_id << ',' << fmt(e.soc_Wh) << ','
            << fmt(e.temperature_K) << ',' << zone_name(e.zone) << ',' << fmt(e.harvest_W) << ','
            << fmt(e.load_W) << '\n';
    }
    return out.str();
}

std::string MetricsLedger::links_csv() const {
    std::ostringstream out;
    out << "contact_id,src_node,dst_node,kind,start_s,end_s,capacity_bits,bits_carried\n";
    for (const auto& l : links) {
        out << l.contact_id << ',' << l.src_node << ',' << l.dst_node << ','
            << contact_kind_name(l.kind) << ',' << fmt(l.start_s) << ',' << fmt(l.end_s) << ','
            << fmt(l.capacity_bits) << ',' << fmt(l.bits_carried) << '\n';
    }
    return out.str();
}

std::string MetricsLedger::orchestration_csv() const {
    std::ostringstream out;
    out << "time_s,tier,action,task_id,nodes,detail\n";
    for (const auto& o : orchestration) {
        out << fmt(o.t_s) << ',' << o.tier << ',' << o.action << ',' << o.task << ',' << o.nodes
            << ',' << o.detail << '\n';
    }
    return out.str();
}

std::map<TaskClass, MetricsLedger::ClassStats> MetricsLedger::class_stats() const {
    std::map<TaskClass, ClassStats> stats;
    std::map<TaskClass, std::vector<double>> latencies;
    for (const auto& t : tasks) {
        auto& s = stats[t.cls];
        ++s.generated;
        switch (t.status) {
            case TaskStatus::Completed:
                ++s.completed;
                latencies[t.cls].push_back(t.latency_s);
                break;
            case TaskStatus::Missed: ++s.missed; break;
            case TaskStatus::InFlight: ++s.in_flight; break;
        }
    }
    for (auto& [cls, s] : stats) {
        const auto& lat = latencies[cls];
        if (!lat.empty()) {
            double sum = 0.0;
            for (double v : lat) sum += v;
            s.mean_latency_s = sum / static_cast<double>(lat.size());
            s.p95_latency_s = percentile_nearest_rank(lat, 0.95);
        }
    }
    return stats;
}

std::string MetricsLedger::summary_json() const {
    json j;
    j["scenario"] = scenario_name;
    j["scenario_hash"] = scenario_hash;
    j["seed"] = seed;
    j["rng_algorithm"] = rng_algorithm;
    j["mode"] = mode;
    j["horizon_s"] = horizon_s;
    j["resolved_scenario"] = json::parse(resolved_scenario_json);

    std::size_t completed = 0, missed = 0, in_flight = 0;
    for (const auto& t : tasks) {
        if (t.status == TaskStatus::Completed) ++completed;
        else if (t.status == TaskStatus::Missed) ++missed;
        else ++in_flight;
    }
    j["tasks"] = {{"generated", tasks.size()},
                  {"completed", completed},
                  {"missed", missed},
                  {"in_flight", in_flight}};

    json per_class;
    for (const auto& [cls, s] : class_stats()) {
        per_class[task_class_name(cls)] = {{"generated", s.generated},
                                           {"completed", s.completed},
                                           {"missed", s.missed},
                                           {"in_flight", s.in_flight},
                                           {"mean_latency_s", s.mean_latency_s},
                                           {"p95_latency_s", s.p95_latency_s}};
    }
    j["per_class"] = per_class;

    j["counters"] = {{"handovers", handovers},
                     {"migrations", migrations},
                     {"replicas_spawned", replicas_spawned},
                     {"red_zone_violations", red_zone_violations},
                     {"stale_table_flags", stale_table_flags},
                     {"sla_breaches", sla_breaches},
                     {"unprotected_tasks", unprotected_tasks},
                     {"seu_faults", seu_faults},
                     {"node_failures", node_failures}};
    j["audit"] = {{"leo_local_decisions", audit.leo_local_decisions},
                  {"meo_epochs", audit.meo_epochs},
                  {"meo_moves", audit.meo_moves},
                  {"geo_epochs", audit.geo_epochs},
                  {"global_graph_builds", audit.global_graph_builds}};
    j["feeder_bits_down"] = feeder_bits_down;
    j["feeder_bits_up"] = feeder_bits_up;
    j["total_load_energy_Wh"] = total_load_energy_Wh;
    j["energy_per_completed_task_Wh"] =
        completed > 0 ? total_load_energy_Wh / static_cast<double>(completed) : 0.0;

    json accounts;
    double worst_residual = 0.0;
    for (const auto& [node, acc] : energy_accounts) {
        accounts[std::to_string(node)] = {{"initial_soc_Wh", acc.initial_soc_Wh},
                                          {"final_soc_Wh", acc.final_soc_Wh},
                                          {"integral_J", acc.integral_J},
                                          {"clamp_surplus_J", acc.clamp_surplus_J},
                                          {"clamp_deficit_J", acc.clamp_deficit_J},
                                          {"residual_J", acc.residual_J()}};
        worst_residual = std::max(worst_residual, std::abs(acc.residual_J()));
    }
    j["energy_accounts"] = accounts;
    j["worst_energy_residual_J"] = worst_residual;
    return j.dump(2);
}

void MetricsLedger::write_files(const std::string& out_dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const auto write = [&](const std::string& name, const std::string& content) {
        std::ofstream out(fs::path(out_dir) / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write output file: " + name);
        out << content;
    };
    write("tasks.csv", tasks_csv());
    write("energy.csv", energy_csv());
    write("links.csv", links_csv());
    write("orchestration.csv", orchestration_csv());
    write("summary.json", summary_json());
}

}  // namespace sbdc
