#pragma once

// Runtime schedulers over sliding-window evaluations. Encoder modes differ
// only in how windows are grouped and batched; the entropy parameters they
// produce are bit-identical. The wavefront mode is the decoder's schedule:
// windows on the same spatial anti-diagonal are mutually independent under
// the causal-anchored window, so each priority group can run in parallel.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "scc/config.hpp"
#include "scc/layout.hpp"

namespace scc {

enum class ScheduleMode : uint32_t {
    DS = 0,        // dynamic sequence: one window per element, strictly serial
    PadBatch = 1,  // all windows in one group, padded to a common length
    BDS = 2,       // batched dynamic sequence: grouped by context length
    BdsScs = 3,    // BDS + skip intermediate channel segments: one window per position
    Wavefront = 4, // decoder: one window per position, grouped by diagonal
};

inline const char* schedule_mode_name(ScheduleMode m) {
    switch (m) {
        case ScheduleMode::DS: return "ds";
        case ScheduleMode::PadBatch: return "pb";
        case ScheduleMode::BDS: return "bds";
        case ScheduleMode::BdsScs: return "bds-scs";
        case ScheduleMode::Wavefront: return "wavefront";
    }
    return "?";
}

inline bool is_encoder_mode(ScheduleMode m) { return m != ScheduleMode::Wavefront; }

struct WindowSpec {
    SeqElement target;                // per-position windows use k = N_cs-1
    bool per_position = false;        // BdsScs / Wavefront: serves all segments of (i, j)
    int64_t target_slot = 0;          // coding-order slot of target
    std::vector<SeqElement> context;  // window elements before target, coding order

    int64_t context_len() const { return static_cast<int64_t>(context.size()); }
};

struct PriorityGroup {
    int64_t priority = 0;
    std::vector<WindowSpec> windows;
};

struct Schedule {
    ScheduleMode mode = ScheduleMode::DS;
    std::vector<PriorityGroup> groups;

    int64_t window_count() const {
        int64_t n = 0;
        for (const auto& g : groups) n += static_cast<int64_t>(g.windows.size());
        return n;
    }
    int64_t max_group_size() const {
        int64_t m = 0;
        for (const auto& g : groups) m = std::max<int64_t>(m, static_cast<int64_t>(g.windows.size()));
        return m;
    }
};

inline std::vector<WindowSpec> enumerate_windows(const SequenceLayout& lay, const ModelConfig& cfg,
                                                 ScheduleMode mode) {
    if (lay.n_cs != cfg.channel_segments || lay.C != cfg.bottleneck || lay.order != cfg.order)
        throw std::invalid_argument("enumerate_windows: layout does not match config");
    std::vector<WindowSpec> windows;
    const bool per_position = (mode == ScheduleMode::BdsScs || mode == ScheduleMode::Wavefront);
    if (per_position) {
        windows.reserve(static_cast<size_t>(lay.H) * lay.W);
        for (int i = 0; i < lay.H; ++i)
            for (int j = 0; j < lay.W; ++j) {
                WindowSpec w;
                w.target = SeqElement{i, j, lay.n_cs - 1};
                w.per_position = true;
                w.target_slot = lay.slot_of(w.target);
                w.context = window_context(lay, cfg.receptive_h, cfg.receptive_w, w.target);
                windows.push_back(std::move(w));
            }
    } else {
        windows.reserve(static_cast<size_t>(lay.seq_len()));
        for (int64_t s = 0; s < lay.seq_len(); ++s) {
            WindowSpec w;
            w.target = lay.coords_of(s);
            w.target_slot = s;
            w.context = window_context(lay, cfg.receptive_h, cfg.receptive_w, w.target);
            windows.push_back(std::move(w));
        }
    }
    return windows;
}

inline int64_t priority_of(ScheduleMode mode, const WindowSpec& w) {
    switch (mode) {
        case ScheduleMode::DS: return w.target_slot;
        case ScheduleMode::PadBatch: return 0;
        case ScheduleMode::BDS:
        case ScheduleMode::BdsScs: return w.context_len();
        case ScheduleMode::Wavefront: return w.target.i + w.target.j;
    }
    throw std::invalid_argument("priority_of: unknown mode");
}

inline Schedule build_schedule(std::vector<WindowSpec> windows, ScheduleMode mode) {
    std::map<int64_t, std::vector<WindowSpec>> by_priority;
    for (WindowSpec& w : windows) by_priority[priority_of(mode, w)].push_back(std::move(w));
    Schedule s;
    s.mode = mode;
    s.groups.reserve(by_priority.size());
    for (auto& [prio, group] : by_priority) {
        std::sort(group.begin(), group.end(),
                  [](const WindowSpec& a, const WindowSpec& b) { return a.target_slot < b.target_slot; });
        s.groups.push_back(PriorityGroup{prio, std::move(group)});
    }
    return s;
}

struct CausalityReport {
    bool pass = true;
    std::string first_violation;
};

namespace detail {
inline std::string element_str(SeqElement e) {
    std::ostringstream os;
    os << "(" << e.i << "," << e.j << "," << e.k << ")";
    return os.str();
}
}  // namespace detail

// Brute-force dependency oracle.
//   * every mode: each window's context lies inside the causal spatial
//     window of its target and strictly before it in coding order;
//   * serial/wavefront schedules (the decode-feasible ones): a window may
//     only read elements produced by earlier groups, except its own
//     position's earlier segments (decoded within the same window);
//   * wavefront: targets within a group are pairwise distinct positions.
inline CausalityReport verify_causality(const Schedule& sched, const SequenceLayout& lay,
                                        const ModelConfig& cfg) {
    CausalityReport rep;
    auto fail = [&rep](const std::string& msg) {
        if (rep.pass) {
            rep.pass = false;
            rep.first_violation = msg;
        }
    };

    const bool strict = (sched.mode == ScheduleMode::DS || sched.mode == ScheduleMode::Wavefront);
    std::set<int64_t> coded;  // element slots produced by earlier groups

    for (size_t g = 0; g < sched.groups.size(); ++g) {
        const PriorityGroup& group = sched.groups[g];
        if (sched.mode == ScheduleMode::Wavefront) {
            std::set<std::pair<int, int>> positions;
            for (const WindowSpec& w : group.windows)
                if (!positions.insert({w.target.i, w.target.j}).second)
                    fail("group " + std::to_string(g) + ": duplicate target position " +
                         detail::element_str(w.target));
        }
        for (const WindowSpec& w : group.windows) {
            const int i_lo = w.target.i - cfg.receptive_h + 1;
            const int j_lo = w.target.j - cfg.receptive_w + 1;
            int64_t prev_slot = -1;
            for (const SeqElement& e : w.context) {
                const int64_t slot = lay.slot_of(e);
                if (slot >= w.target_slot)
                    fail("window " + detail::element_str(w.target) + " reads non-causal element " +
                         detail::element_str(e));
                if (e.i < i_lo || e.i > w.target.i || e.j < j_lo || e.j > w.target.j)
                    fail("window " + detail::element_str(w.target) + " reads out-of-window element " +
                         detail::element_str(e));
                if (slot <= prev_slot)
                    fail("window " + detail::element_str(w.target) + " context not in coding order");
                prev_slot = slot;
                if (strict) {
                    // per-position windows decode their own earlier segments
                    // inside the same window; per-element windows do not
                    const bool own_position =
                        w.per_position && e.i == w.target.i && e.j == w.target.j;
                    if (!own_position && coded.find(slot) == coded.end())
                        fail("window " + detail::element_str(w.target) + " in group " +
                             std::to_string(g) + " reads element " + detail::element_str(e) +
                             " not coded by any earlier group");
                }
            }
        }
        for (const WindowSpec& w : group.windows) {
            if (w.per_position) {
                for (int k = 0; k < lay.n_cs; ++k)
                    coded.insert(lay.slot_of(SeqElement{w.target.i, w.target.j, k}));
            } else {
                coded.insert(w.target_slot);
            }
        }
    }
    return rep;
}

}  // namespace scc
