#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "contact_graph.hpp"
#include "power_thermal.hpp"
#include "tasks.hpp"

namespace sbdc {

enum class TaskStatus { InFlight, Completed, Missed };

const char* task_status_name(TaskStatus s);

struct TaskRecord {
    TaskId id = -1;
    TaskClass cls = TaskClass::Housekeeping;
    int origin_node = -1;
    int origin_cohort = -1;
    double arrival_s = 0.0;
    double materialized_s = -1.0;  // at the first compute node; -1 until known
    int exec_node = -1;
    double exec_start_s = -1.0;
    double exec_end_s = -1.0;
    double completion_s = -1.0;
    double deadline_s = -1.0;  // -1: none
    TaskStatus status = TaskStatus::InFlight;
    double latency_s = -1.0;
    int migrations = 0;
    int replicas = 1;
    double input_bits = 0.0;
    double output_bits = 0.0;
    std::string detail;
};

struct EnergySample {
    double t_s;
    int node_id;
    double soc_Wh;
    double temperature_K;
    EnergyZone zone;
    double harvest_W;
    double load_W;
};

struct LinkRecord {
    int contact_id;
    int src_node, dst_node;
    ContactKind kind;
    double start_s, end_s;
    double capacity_bits;
    double bits_carried = 0.0;
};

struct OrchestrationLine {
    double t_s;
    std::string tier;    // leo | meo | geo | engine
    std::string action;
    TaskId task = -1;
    std::string nodes;
    std::string detail;
};

struct NodeEnergyAccount {
    double initial_soc_Wh = 0.0;
    double final_soc_Wh = 0.0;
    double integral_J = 0.0;  // integral of (harvest - load) dt
    double clamp_surplus_J = 0.0;
    double clamp_deficit_J = 0.0;
    double battery_capacity_Wh = 0.0;

    // conservation residual: d(soc)*3600 - integral - (deficit - surplus)
    double residual_J() const;
};

struct SlaReportLine {
    double t_s;
    TaskClass cls;
    double quantile;
    double bound_s;
    double observed_s;
    std::size_t samples;
    bool breach;
};

struct AccessAudit {
    std::int64_t leo_local_decisions = 0;
    std::int64_t meo_epochs = 0;
    std::int64_t meo_moves = 0;
    std::int64_t geo_epochs = 0;
    std::int64_t global_graph_builds = 0;
};

struct MetricsLedger {
    std::string scenario_name;
    std::uint64_t scenario_hash = 0;
    std::uint64_t seed = 0;
    std::string rng_algorithm;
    std::string mode;
    std::string resolved_scenario_json;
    double horizon_s = 0.0;

    std::vector<TaskRecord> tasks;  // by task id
    std::vector<EnergySample> energy;
    std::vector<LinkRecord> links;
    std::vector<OrchestrationLine> orchestration;
    std::map<int, NodeEnergyAccount> energy_accounts;
    std::vector<SlaReportLine> sla_reports;
    AccessAudit audit;

    std::int64_t handovers = 0;
    std::int64_t migrations = 0;
    std::int64_t replicas_spawned = 0;
    std::int64_t red_zone_violations = 0;
    std::int64_t stale_table_flags = 0;
    std::int64_t sla_breaches = 0;
    std::int64_t unprotected_tasks = 0;
    std::int64_t seu_faults = 0;
    std::int64_t node_failures = 0;
    double feeder_bits_down = 0.0;
    double feeder_bits_up = 0.0;
    double total_load_energy_Wh = 0.0;  // all powered nodes

    std::string tasks_csv() const;
    std::string energy_csv() const;
    std::string links_csv() const;
    std::string orchestration_csv() const;
    std::string summary_json() const;

    // tasks.csv, energy.csv, links.csv, orchestration.csv, summary.json
    void write_files(const std::string& out_dir) const;

    struct ClassStats {
        std::size_t generated = 0, completed = 0, missed = 0, in_flight = 0;
        double mean_latency_s = 0.0;
        double p95_latency_s = 0.0;
    };
    std::map<TaskClass, ClassStats> class_stats() const;
};

}  // namespace sbdc
