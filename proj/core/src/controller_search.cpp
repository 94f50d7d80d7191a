#include "advforge/controller_search.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "advforge/errors.hpp"

namespace advforge {

namespace {

constexpr std::size_t kH = kControllerHidden;
constexpr std::size_t kE = kControllerEmbed;
constexpr std::size_t kGates = 4 * kH;

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

ControllerTensors zero_tensors() {
    ControllerTensors t;
    t.wx.assign(kGates * kE, 0.0);
    t.wh.assign(kGates * kH, 0.0);
    t.b.assign(kGates, 0.0);
    for (std::size_t h = 0; h < 3; ++h) {
        t.head_w[h].assign(kHeadSizes[h] * kH, 0.0);
        t.head_b[h].assign(kHeadSizes[h], 0.0);
        t.embed[h].assign(kHeadSizes[h] * kE, 0.0);
    }
    return t;
}

bool all_finite(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

bool all_finite(const ControllerTensors& t) {
    if (!all_finite(t.wx) || !all_finite(t.wh) || !all_finite(t.b)) {
        return false;
    }
    for (std::size_t h = 0; h < 3; ++h) {
        if (!all_finite(t.head_w[h]) || !all_finite(t.head_b[h]) ||
            !all_finite(t.embed[h])) {
            return false;
        }
    }
    return true;
}

void check_choices(const std::vector<std::size_t>& choices, std::size_t blocks) {
    if (choices.size() != 3 * blocks) {
        throw PreconditionError("expected " + std::to_string(3 * blocks) +
                                " choices, got " + std::to_string(choices.size()));
    }
    for (std::size_t s = 0; s < choices.size(); ++s) {
        if (choices[s] >= kHeadSizes[s % 3]) {
            throw PreconditionError("choice " + std::to_string(choices[s]) +
                                    " is out of range at step " + std::to_string(s));
        }
    }
}

struct StepCache {
    std::vector<double> x, h_prev, c_prev;
    std::vector<double> gi, gf, gg, go;
    std::vector<double> cell, tanh_cell, hidden;
    std::vector<double> probs;
    std::size_t head = 0;
    std::size_t choice = 0;
};

std::vector<double> softmax(const std::vector<double>& logits) {
    const double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double total = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        out[k] = std::exp(logits[k] - top);
        total += out[k];
    }
    for (double& v : out) {
        v /= total;
    }
    return out;
}

/// Runs the recurrence. When rng is set, choices is filled by sampling;
/// otherwise the stored choices drive the unroll. Caches are captured only
/// when a backward pass will follow.
double unroll(const ControllerState& state, std::vector<std::size_t>& choices,
              Rng* rng, std::vector<StepCache>* caches) {
    const ControllerTensors& p = state.params;
    const std::size_t steps = 3 * state.blocks;
    std::vector<double> x(kE, 0.0);
    std::vector<double> h(kH, 0.0);
    std::vector<double> c(kH, 0.0);
    std::vector<double> gates(kGates);
    double log_prob = 0.0;

    for (std::size_t s = 0; s < steps; ++s) {
        const std::size_t head = s % 3;
        StepCache cache;
        if (caches) {
            cache.x = x;
            cache.h_prev = h;
            cache.c_prev = c;
        }

        for (std::size_t r = 0; r < kGates; ++r) {
            double acc = p.b[r];
            const double* wxr = p.wx.data() + r * kE;
            for (std::size_t j = 0; j < kE; ++j) {
                acc += wxr[j] * x[j];
            }
            const double* whr = p.wh.data() + r * kH;
            for (std::size_t j = 0; j < kH; ++j) {
                acc += whr[j] * h[j];
            }
            gates[r] = acc;
        }

        std::vector<double> gi(kH), gf(kH), gg(kH), go(kH);
        for (std::size_t j = 0; j < kH; ++j) {
            gi[j] = sigmoid(gates[j]);
            gf[j] = sigmoid(gates[kH + j]);
            gg[j] = std::tanh(gates[2 * kH + j]);
            go[j] = sigmoid(gates[3 * kH + j]);
            c[j] = gf[j] * c[j] + gi[j] * gg[j];
        }
        std::vector<double> tc(kH);
        for (std::size_t j = 0; j < kH; ++j) {
            tc[j] = std::tanh(c[j]);
            h[j] = go[j] * tc[j];
        }

        const std::size_t width = kHeadSizes[head];
        std::vector<double> logits(width);
        for (std::size_t k = 0; k < width; ++k) {
            double acc = p.head_b[head][k];
            const double* row = p.head_w[head].data() + k * kH;
            for (std::size_t j = 0; j < kH; ++j) {
                acc += row[j] * h[j];
            }
            logits[k] = acc;
        }
        const std::vector<double> probs = softmax(logits);

        std::size_t choice;
        if (rng) {
            const double u = rng->uniform();
            double cum = 0.0;
            choice = width - 1;
            for (std::size_t k = 0; k < width; ++k) {
                cum += probs[k];
                if (u < cum) {
                    choice = k;
                    break;
                }
            }
            choices.push_back(choice);
        } else {
            choice = choices[s];
        }
        log_prob += std::log(probs[choice]);

        if (caches) {
            cache.gi = std::move(gi);
            cache.gf = std::move(gf);
            cache.gg = std::move(gg);
            cache.go = std::move(go);
            cache.cell = c;
            cache.tanh_cell = tc;
            cache.hidden = h;
            cache.probs = probs;
            cache.head = head;
            cache.choice = choice;
            caches->push_back(std::move(cache));
        }

        const double* erow = p.embed[head].data() + choice * kE;
        x.assign(erow, erow + kE);
    }
    return log_prob;
}

} // namespace

ControllerState make_controller(std::size_t blocks, uint64_t seed) {
    if (blocks < 1) {
        throw ConfigError("controller needs at least one block");
    }
    ControllerState state;
    state.blocks = blocks;
    state.params = zero_tensors();
    Rng rng(derive_seed(seed, "controller-init"));
    const auto fill = [&rng](std::vector<double>& v) {
        for (double& x : v) {
            x = 0.16 * rng.uniform() - 0.08;
        }
    };
    fill(state.params.wx);
    fill(state.params.wh);
    fill(state.params.b);
    for (std::size_t h = 0; h < 3; ++h) {
        fill(state.params.head_w[h]);
        fill(state.params.head_b[h]);
        fill(state.params.embed[h]);
    }
    return state;
}

SampledPolicy sample_policy(const ControllerState& state, Rng& rng) {
    SampledPolicy out;
    out.choices.reserve(3 * state.blocks);
    out.log_prob = unroll(state, out.choices, &rng, nullptr);
    out.policy = choices_to_policy(out.choices);
    return out;
}

double log_prob_of(const ControllerState& state, const std::vector<std::size_t>& choices) {
    check_choices(choices, state.blocks);
    std::vector<std::size_t> fixed = choices;
    return unroll(state, fixed, nullptr, nullptr);
}

std::pair<double, ControllerTensors> log_prob_grad(const ControllerState& state,
                                                   const std::vector<std::size_t>& choices) {
    check_choices(choices, state.blocks);
    std::vector<std::size_t> fixed = choices;
    std::vector<StepCache> caches;
    caches.reserve(fixed.size());
    const double log_prob = unroll(state, fixed, nullptr, &caches);

    const ControllerTensors& p = state.params;
    ControllerTensors grad = zero_tensors();
    std::vector<double> dh_next(kH, 0.0);
    std::vector<double> dc_next(kH, 0.0);

    for (std::size_t s = caches.size(); s-- > 0;) {
        const StepCache& cache = caches[s];
        const std::size_t head = cache.head;
        const std::size_t width = kHeadSizes[head];

        std::vector<double> dh = dh_next;
        for (std::size_t k = 0; k < width; ++k) {
            const double dlogit = (k == cache.choice ? 1.0 : 0.0) - cache.probs[k];
            grad.head_b[head][k] += dlogit;
            double* grow = grad.head_w[head].data() + k * kH;
            const double* wrow = p.head_w[head].data() + k * kH;
            for (std::size_t j = 0; j < kH; ++j) {
                grow[j] += dlogit * cache.hidden[j];
                dh[j] += dlogit * wrow[j];
            }
        }

        std::vector<double> da(kGates);
        for (std::size_t j = 0; j < kH; ++j) {
            const double dout = dh[j] * cache.tanh_cell[j];
            const double dcell =
                dh[j] * cache.go[j] * (1.0 - cache.tanh_cell[j] * cache.tanh_cell[j]) +
                dc_next[j];
            const double din = dcell * cache.gg[j];
            const double dcand = dcell * cache.gi[j];
            const double dforget = dcell * cache.c_prev[j];
            dc_next[j] = dcell * cache.gf[j];

            da[j] = din * cache.gi[j] * (1.0 - cache.gi[j]);
            da[kH + j] = dforget * cache.gf[j] * (1.0 - cache.gf[j]);
            da[2 * kH + j] = dcand * (1.0 - cache.gg[j] * cache.gg[j]);
            da[3 * kH + j] = dout * cache.go[j] * (1.0 - cache.go[j]);
        }

        std::fill(dh_next.begin(), dh_next.end(), 0.0);
        std::vector<double> dx(kE, 0.0);
        for (std::size_t r = 0; r < kGates; ++r) {
            const double dar = da[r];
            grad.b[r] += dar;
            double* gx = grad.wx.data() + r * kE;
            const double* wxr = p.wx.data() + r * kE;
            for (std::size_t j = 0; j < kE; ++j) {
                gx[j] += dar * cache.x[j];
                dx[j] += dar * wxr[j];
            }
            double* gh = grad.wh.data() + r * kH;
            const double* whr = p.wh.data() + r * kH;
            for (std::size_t j = 0; j < kH; ++j) {
                gh[j] += dar * cache.h_prev[j];
                dh_next[j] += dar * whr[j];
            }
        }

        if (s > 0) {
            const std::size_t prev_head = caches[s - 1].head;
            const std::size_t prev_choice = caches[s - 1].choice;
            double* erow = grad.embed[prev_head].data() + prev_choice * kE;
            for (std::size_t j = 0; j < kE; ++j) {
                erow[j] += dx[j];
            }
        }
    }
    return {log_prob, std::move(grad)};
}

std::vector<std::vector<double>> step_distributions(const ControllerState& state,
                                                    const std::vector<std::size_t>& choices) {
    check_choices(choices, state.blocks);
    std::vector<std::size_t> fixed = choices;
    std::vector<StepCache> caches;
    caches.reserve(fixed.size());
    unroll(state, fixed, nullptr, &caches);
    std::vector<std::vector<double>> out;
    out.reserve(caches.size());
    for (StepCache& cache : caches) {
        out.push_back(std::move(cache.probs));
    }
    return out;
}

DiscretePolicy choices_to_policy(const std::vector<std::size_t>& choices) {
    if (choices.empty() || choices.size() % 3 != 0) {
        throw PreconditionError("choice count must be a positive multiple of 3");
    }
    DiscretePolicy policy;
    for (std::size_t s = 0; s < choices.size(); s += 3) {
        const std::size_t neg = choices[s];
        const std::size_t pos = choices[s + 1];
        const std::size_t bin = choices[s + 2];
        if (neg >= kHeadSizes[0] || pos >= kHeadSizes[1] || bin >= kHeadSizes[2]) {
            throw PreconditionError("choice index out of range");
        }
        SubPolicy sub;
        if (neg > 0) {
            sub.neg = static_cast<AdversaryKind>(neg - 1);
        }
        if (pos > 0) {
            sub.pos = static_cast<AdversaryKind>(3 + pos);
        }
        sub.prob = kProbBins[bin];
        policy.sub_policies.push_back(sub);
    }
    return policy;
}

std::vector<double> encode_choices(const std::vector<std::size_t>& choices) {
    if (choices.empty() || choices.size() % 3 != 0) {
        throw PreconditionError("choice count must be a positive multiple of 3");
    }
    std::vector<double> out;
    out.reserve(choices.size());
    for (std::size_t s = 0; s < choices.size(); ++s) {
        const std::size_t width = kHeadSizes[s % 3];
        if (choices[s] >= width) {
            throw PreconditionError("choice index out of range");
        }
        out.push_back(static_cast<double>(choices[s]) / static_cast<double>(width - 1));
    }
    return out;
}

bool reinforce_update(ControllerState& state, const SampledPolicy& sampled,
                      double reward, double lr) {
    if (!std::isfinite(reward)) {
        throw PreconditionError("reward must be finite");
    }
    auto [log_prob, grad] = log_prob_grad(state, sampled.choices);
    (void)log_prob;

    const double scale = lr * (reward - state.baseline);
    bool applied = false;
    if (all_finite(grad) && std::isfinite(scale)) {
        const auto axpy = [scale](std::vector<double>& param, const std::vector<double>& g) {
            for (std::size_t i = 0; i < param.size(); ++i) {
                param[i] += scale * g[i];
            }
        };
        axpy(state.params.wx, grad.wx);
        axpy(state.params.wh, grad.wh);
        axpy(state.params.b, grad.b);
        for (std::size_t h = 0; h < 3; ++h) {
            axpy(state.params.head_w[h], grad.head_w[h]);
            axpy(state.params.head_b[h], grad.head_b[h]);
            axpy(state.params.embed[h], grad.embed[h]);
        }
        applied = true;
    } else {
        ++state.skipped_updates;
    }
    state.baseline = state.beta * state.baseline + (1.0 - state.beta) * reward;
    return applied;
}

ControllerSearchResult run_controller_search(ControllerState& state,
                                             const PolicyObjective& objective,
                                             std::size_t iterations, Rng& rng,
                                             double lr) {
    if (!objective) {
        throw PreconditionError("objective must be callable");
    }
    if (iterations < 1) {
        throw PreconditionError("need at least one iteration");
    }

    ControllerSearchResult result;
    result.best_reward = -std::numeric_limits<double>::infinity();
    double worst = 0.0;

    for (std::size_t t = 0; t < iterations; ++t) {
        SampledPolicy sampled = sample_policy(state, rng);
        double reward = 0.0;
        try {
            reward = objective(sampled.policy);
            if (!std::isfinite(reward)) {
                throw NumericalError("objective returned a non-finite reward");
            }
        } catch (const std::exception&) {
            reward = worst;
            ++result.failed_evaluations;
        }
        worst = result.steps.empty() ? reward : std::min(worst, reward);

        reinforce_update(state, sampled, reward, lr);
        if (reward > result.best_reward) {
            result.best_reward = reward;
            result.best_policy = sampled.policy;
        }
        result.steps.push_back(PolicyStep{std::move(sampled), reward});
    }
    return result;
}

SearchTrace to_search_trace(const ControllerSearchResult& result) {
    SearchTrace trace;
    trace.steps.reserve(result.steps.size());
    for (const PolicyStep& step : result.steps) {
        trace.steps.push_back(TraceStep{encode_choices(step.sampled.choices), step.reward});
    }
    return trace;
}

namespace {

nlohmann::json tensor_json(const std::vector<double>& data,
                           std::vector<std::size_t> shape) {
    return {{"shape", shape}, {"data", data}};
}

std::vector<double> read_tensor(const nlohmann::json& doc, const std::string& name,
                                const std::vector<std::size_t>& shape) {
    if (!doc.contains(name) || !doc[name].is_object() || !doc[name].contains("shape") ||
        !doc[name].contains("data")) {
        throw ParseError("checkpoint tensor " + name + " is missing or malformed");
    }
    const auto got_shape = doc[name]["shape"].get<std::vector<std::size_t>>();
    if (got_shape != shape) {
        throw ParseError("checkpoint tensor " + name + " has the wrong shape");
    }
    std::size_t expect = 1;
    for (std::size_t d : shape) {
        expect *= d;
    }
    auto data = doc[name]["data"].get<std::vector<double>>();
    if (data.size() != expect) {
        throw ParseError("checkpoint tensor " + name + " has the wrong element count");
    }
    if (!all_finite(data)) {
        throw ParseError("checkpoint tensor " + name + " holds non-finite values");
    }
    return data;
}

const std::array<std::string, 3> kHeadNames = {"neg", "pos", "prob"};

} // namespace

std::string serialize_controller(const ControllerState& state) {
    nlohmann::json doc;
    doc["blocks"] = state.blocks;
    doc["hidden_dim"] = kH;
    doc["embedding_dim"] = kE;
    doc["beta"] = state.beta;
    doc["baseline"] = state.baseline;
    doc["skipped_updates"] = state.skipped_updates;
    nlohmann::json tensors;
    tensors["wx"] = tensor_json(state.params.wx, {kGates, kE});
    tensors["wh"] = tensor_json(state.params.wh, {kGates, kH});
    tensors["b"] = tensor_json(state.params.b, {kGates});
    for (std::size_t h = 0; h < 3; ++h) {
        tensors[kHeadNames[h] + "_w"] =
            tensor_json(state.params.head_w[h], {kHeadSizes[h], kH});
        tensors[kHeadNames[h] + "_b"] = tensor_json(state.params.head_b[h], {kHeadSizes[h]});
        tensors[kHeadNames[h] + "_e"] =
            tensor_json(state.params.embed[h], {kHeadSizes[h], kE});
    }
    doc["tensors"] = std::move(tensors);
    return doc.dump(2) + "\n";
}

ControllerState parse_controller(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("checkpoint is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("blocks") || !doc.contains("tensors") ||
        !doc["tensors"].is_object()) {
        throw ParseError("checkpoint must hold blocks and tensors");
    }
    try {
        if (doc.value("hidden_dim", std::size_t{0}) != kH ||
            doc.value("embedding_dim", std::size_t{0}) != kE) {
            throw ParseError("checkpoint dimensions do not match this build");
        }

        ControllerState state;
        state.blocks = doc["blocks"].get<std::size_t>();
        if (state.blocks < 1) {
            throw ParseError("checkpoint must hold at least one block");
        }
        state.beta = doc.value("beta", 0.9);
        state.baseline = doc.value("baseline", 0.0);
        state.skipped_updates = doc.value("skipped_updates", std::size_t{0});
        if (!std::isfinite(state.beta) || !std::isfinite(state.baseline)) {
            throw ParseError("checkpoint scalars must be finite");
        }

        const nlohmann::json& tensors = doc["tensors"];
        state.params.wx = read_tensor(tensors, "wx", {kGates, kE});
        state.params.wh = read_tensor(tensors, "wh", {kGates, kH});
        state.params.b = read_tensor(tensors, "b", {kGates});
        for (std::size_t h = 0; h < 3; ++h) {
            state.params.head_w[h] =
                read_tensor(tensors, kHeadNames[h] + "_w", {kHeadSizes[h], kH});
            state.params.head_b[h] =
                read_tensor(tensors, kHeadNames[h] + "_b", {kHeadSizes[h]});
            state.params.embed[h] =
                read_tensor(tensors, kHeadNames[h] + "_e", {kHeadSizes[h], kE});
        }
        return state;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("checkpoint malformed: ") + e.what());
    }
}

void save_controller(const ControllerState& state, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ParseError("cannot open " + path + " for writing");
    }
    out << serialize_controller(state);
}

ControllerState load_controller(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_controller(buffer.str());
}

} // namespace advforge
