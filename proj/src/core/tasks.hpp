#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace sbdc {

enum class TaskClass {
    RealTimeInference,
    InterruptibleCompression,
    BulkTraining,
    StorageRetrieval,
    Housekeeping,
};

struct TaskClassFlags {
    bool delay_sensitive = false;
    bool interruptible = false;
    bool checkpointable = false;
    bool delay_tolerant_ok = false;  // may run on the lunar tier
};

constexpr TaskClassFlags class_flags(TaskClass c) {
    switch (c) {
        case TaskClass::RealTimeInference: return {true, false, false, false};
        case TaskClass::InterruptibleCompression: return {false, true, true, false};
        case TaskClass::BulkTraining: return {false, true, true, true};
        case TaskClass::StorageRetrieval: return {false, true, false, true};
        case TaskClass::Housekeeping: return {false, false, false, true};
    }
    return {};
}

const char* task_class_name(TaskClass c);
std::optional<TaskClass> task_class_from_name(const std::string& name);

using TaskId = std::int64_t;

struct Task {
    TaskId task_id = -1;
    TaskClass task_class = TaskClass::Housekeeping;
    double arrival_time_s = 0.0;
    int origin_node = -1;    // node id; -1 when originating at a cohort
    int origin_cohort = -1;  // cohort id; -1 when originating at a node
    double input_bits = 0.0;
    double compute_demand_units = 0.0;  // 0 only for pure transfers
    double output_bits = 0.0;
    std::optional<double> deadline_s;  // absolute sim time
    int replication_k = 1;
    TaskId predecessor = -1;  // released when the predecessor completes
};

}  // namespace sbdc
