#pragma once

#include <functional>
#include <vector>

#include "hcg/tensor.hpp"

namespace hcg {

/// Records the operations of one forward pass in execution order (which is
/// topological, since operations run eagerly) and replays their adjoints in
/// reverse for gradient propagation. Independent tapes share no state and may
/// run concurrently.
template <typename T>
class Tape {
public:
    /// A non-recording tape evaluates forward only; record() is a no-op.
    explicit Tape(bool recording = true) : recording_(recording) {}

    bool recording() const { return recording_; }
    std::size_t size() const { return nodes_.size(); }

    void record(const char* op, std::function<void()> backward) {
        if (recording_) nodes_.push_back(Node{op, std::move(backward)});
    }

    /// Seeds d(loss)/d(loss) = 1 and visits every node once in reverse order.
    void backward(const TensorPtr<T>& loss) {
        if (!recording_) throw UsageError("backward on a non-recording tape");
        if (!loss || loss->numel() != 1) {
            throw UsageError("backward requires a scalar loss tensor");
        }
        loss->ensure_grad();
        loss->grad[0] = T(1);
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->backward();
    }

    void clear() { nodes_.clear(); }

private:
    struct Node {
        const char* op;
        std::function<void()> backward;
    };

    bool recording_;
    std::vector<Node> nodes_;
};

}  // namespace hcg
