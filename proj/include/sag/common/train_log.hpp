#pragma once

#include "sag/common/io.hpp"

#include <cstddef>
#include <vector>

namespace sag {

struct StepLog {
    std::size_t step = 0;
    double loss = 0.0;
    double lr = 0.0;
    double margin = 0.0;  // DPO reward margin; 0 for other stages
};

inline void write_train_log_csv(const std::vector<StepLog>& rows, const fs::path& path) {
    AtomicWriter w(path);
    auto& out = w.stream();
    out << "step,loss,lr,margin\n";
    out.precision(10);
    for (const auto& r : rows) out << r.step << ',' << r.loss << ',' << r.lr << ',' << r.margin << '\n';
    w.commit();
}

}  // namespace sag
