#include "driftmap/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <json.hpp>

#include "driftmap/clustering.hpp"
#include "driftmap/errors.hpp"

namespace driftmap {
namespace {

using nlohmann::json;

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

const BlobSpec* find_component(const std::vector<BlobSpec>& comps, const std::string& label) {
    for (const auto& c : comps) {
        if (c.label == label) return &c;
    }
    return nullptr;
}

void check_blob(const BlobSpec& b, std::size_t dim) {
    if (b.label.empty()) throw InvalidArgumentError("blob without a label");
    if (b.mean.size() != dim) throw InvalidArgumentError("blob '" + b.label + "' mean has wrong dimension");
    if (!(b.sigma > 0.0)) throw InvalidArgumentError("blob '" + b.label + "' needs sigma > 0");
    if (!(b.weight > 0.0)) throw InvalidArgumentError("blob '" + b.label + "' needs weight > 0");
}

void check_separation(const std::vector<BlobSpec>& active, const BlobSpec& incoming, double sigmas) {
    for (const auto& c : active) {
        const double need = sigmas * std::max(c.sigma, incoming.sigma);
        if (euclidean_distance(c.mean, incoming.mean) < need) {
            throw InvalidArgumentError("component '" + incoming.label + "' lies closer than " +
                                       std::to_string(sigmas) + " sigma to '" + c.label + "'");
        }
    }
}

// Applies the events scheduled at `batch` to the active component list.
void apply_events(const DriftScenario& sc, std::size_t batch, std::vector<BlobSpec>& comps) {
    for (const auto& ev : sc.events) {
        if (ev.at_batch != batch) continue;
        if (const auto* e = std::get_if<EmergeEvent>(&ev.kind)) {
            double total = 0.0;
            for (const auto& c : comps) total += c.weight;
            for (auto& c : comps) c.weight *= (1.0 - e->blob.weight) / total;
            comps.push_back(e->blob);
        } else {
            const auto& s = std::get<SplitEvent>(ev.kind);
            auto it = std::find_if(comps.begin(), comps.end(),
                                   [&](const BlobSpec& c) { return c.label == s.parent; });
            BlobSpec child = *it;
            child.label = s.child_label;
            for (std::size_t d = 0; d < child.mean.size(); ++d) child.mean[d] += s.offset[d];
            child.weight = it->weight * s.fraction;
            it->weight *= 1.0 - s.fraction;
            comps.push_back(std::move(child));
        }
    }
}

json blob_to_json(const BlobSpec& b) {
    return {{"label", b.label}, {"mean", b.mean}, {"sigma", b.sigma}, {"weight", b.weight}};
}

BlobSpec blob_from_json(const json& j) {
    BlobSpec b;
    b.label = j.at("label").get<std::string>();
    b.mean = j.at("mean").get<Vector>();
    b.sigma = j.value("sigma", 1.0);
    b.weight = j.value("weight", 1.0);
    return b;
}

}  // namespace

void DriftScenario::validate() const {
    if (dim == 0) throw InvalidArgumentError("scenario dim must be positive");
    if (batch_size < 2) throw InvalidArgumentError("scenario batch_size must be at least 2");
    if (n_batches < 1) throw InvalidArgumentError("scenario needs at least one batch");
    if (initial.empty()) throw InvalidArgumentError("scenario needs initial blobs");

    std::vector<BlobSpec> active;
    for (const auto& b : initial) {
        check_blob(b, dim);
        if (find_component(active, b.label)) throw InvalidArgumentError("duplicate label '" + b.label + "'");
        active.push_back(b);
    }
    std::vector<ScenarioEvent> ordered = events;
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const auto& a, const auto& b) { return a.at_batch < b.at_batch; });
    for (const auto& ev : ordered) {
        if (ev.at_batch < 2 || ev.at_batch > n_batches) {
            throw InvalidArgumentError("event batch " + std::to_string(ev.at_batch) +
                                       " outside [2, n_batches]");
        }
        BlobSpec incoming;
        if (const auto* e = std::get_if<EmergeEvent>(&ev.kind)) {
            check_blob(e->blob, dim);
            if (!(e->blob.weight < 1.0)) throw InvalidArgumentError("emerge weight must lie in (0,1)");
            incoming = e->blob;
        } else {
            const auto& s = std::get<SplitEvent>(ev.kind);
            const BlobSpec* parent = find_component(active, s.parent);
            if (!parent) throw InvalidArgumentError("split of unknown component '" + s.parent + "'");
            if (!(s.fraction > 0.0 && s.fraction < 1.0)) {
                throw InvalidArgumentError("split fraction must lie in (0,1)");
            }
            if (s.offset.size() != dim) throw InvalidArgumentError("split offset has wrong dimension");
            incoming = *parent;
            incoming.label = s.child_label;
            for (std::size_t d = 0; d < dim; ++d) incoming.mean[d] += s.offset[d];
        }
        if (find_component(active, incoming.label)) {
            throw InvalidArgumentError("duplicate label '" + incoming.label + "'");
        }
        check_separation(active, incoming, min_separation_sigmas);
        active.push_back(incoming);
    }
}

DriftScenario scenario_from_json(const std::string& text) {
    DriftScenario sc;
    try {
        const json j = json::parse(text);
        sc.dim = j.at("dim").get<std::size_t>();
        sc.batch_size = j.at("batch_size").get<std::size_t>();
        sc.n_batches = j.at("n_batches").get<std::size_t>();
        sc.seed = j.value("seed", std::uint64_t{0});
        sc.min_separation_sigmas = j.value("min_separation_sigmas", 6.0);
        for (const auto& b : j.at("initial")) sc.initial.push_back(blob_from_json(b));
        for (const auto& e : j.value("events", json::array())) {
            ScenarioEvent ev;
            ev.at_batch = e.at("at_batch").get<std::size_t>();
            const auto kind = e.at("kind").get<std::string>();
            if (kind == "emerge") {
                ev.kind = EmergeEvent{blob_from_json(e.at("blob"))};
            } else if (kind == "split") {
                SplitEvent s;
                s.parent = e.at("parent").get<std::string>();
                s.child_label = e.value("label", s.parent + "/split");
                s.offset = e.at("offset").get<Vector>();
                s.fraction = e.at("fraction").get<double>();
                ev.kind = std::move(s);
            } else {
                throw InvalidArgumentError("unknown event kind '" + kind + "'");
            }
            sc.events.push_back(std::move(ev));
        }
    } catch (const json::exception& e) {
        throw InvalidArgumentError(std::string("scenario schema: ") + e.what());
    }
    sc.validate();
    return sc;
}

DriftScenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return scenario_from_json(buf.str());
}

std::string scenario_to_json(const DriftScenario& sc) {
    json j = {{"dim", sc.dim},
              {"batch_size", sc.batch_size},
              {"n_batches", sc.n_batches},
              {"seed", sc.seed},
              {"min_separation_sigmas", sc.min_separation_sigmas},
              {"initial", json::array()},
              {"events", json::array()}};
    for (const auto& b : sc.initial) j["initial"].push_back(blob_to_json(b));
    for (const auto& ev : sc.events) {
        if (const auto* e = std::get_if<EmergeEvent>(&ev.kind)) {
            j["events"].push_back({{"at_batch", ev.at_batch}, {"kind", "emerge"}, {"blob", blob_to_json(e->blob)}});
        } else {
            const auto& s = std::get<SplitEvent>(ev.kind);
            j["events"].push_back({{"at_batch", ev.at_batch},
                                   {"kind", "split"},
                                   {"parent", s.parent},
                                   {"label", s.child_label},
                                   {"offset", s.offset},
                                   {"fraction", s.fraction}});
        }
    }
    return j.dump(2);
}

SyntheticStream generate(const DriftScenario& scenario) {
    scenario.validate();
    std::mt19937_64 rng(scenario.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    SyntheticStream out;
    std::vector<BlobSpec> comps = scenario.initial;
    for (std::size_t t = 1; t <= scenario.n_batches; ++t) {
        apply_events(scenario, t, comps);
        out.components.push_back(comps);

        double total = 0.0;
        for (const auto& c : comps) total += c.weight;
        Batch batch;
        batch.index = t;
        for (std::size_t i = 0; i < scenario.batch_size; ++i) {
            const double u = unit_uniform(rng) * total;
            std::size_t pick = comps.size() - 1;
            double acc = 0.0;
            for (std::size_t j = 0; j < comps.size(); ++j) {
                acc += comps[j].weight;
                if (u < acc) {
                    pick = j;
                    break;
                }
            }
            const auto& c = comps[pick];
            EmbeddingRecord rec;
            rec.id = "b" + std::to_string(t) + "-" + std::to_string(i);
            rec.timestamp = static_cast<std::int64_t>(t) * 3600;
            rec.vector.resize(scenario.dim);
            for (std::size_t d = 0; d < scenario.dim; ++d) rec.vector[d] = c.mean[d] + c.sigma * normal(rng);
            out.truth.emplace(rec.id, c.label);
            batch.records.push_back(std::move(rec));
        }
        out.batches.push_back(std::move(batch));
    }
    return out;
}

std::vector<PostRecord> synthetic_posts(const SyntheticStream& stream, std::uint64_t seed) {
    static const std::vector<std::string> filler = {"people", "today", "think", "news", "world",
                                                    "post",   "the",   "of",    "and",  "really"};
    std::mt19937_64 rng(seed);
    std::vector<PostRecord> posts;
    for (const auto& b : stream.batches) {
        for (const auto& r : b.records) {
            const std::string& label = stream.truth.at(r.id);
            std::string stem;
            for (char c : label) {
                if (std::isalnum(static_cast<unsigned char>(c))) {
                    stem.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
                }
            }
            std::string text;
            for (int w = 0; w < 8; ++w) {
                if (!text.empty()) text.push_back(' ');
                if (rng() % 2 == 0) {
                    text += stem + "term" + std::to_string(rng() % 6);
                } else {
                    text += filler[rng() % filler.size()];
                }
            }
            posts.push_back({r.id, r.timestamp, text, label});
        }
    }
    return posts;
}

double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    if (a.size() != b.size()) throw InvalidArgumentError("partitions differ in length");
    const std::size_t n = a.size();
    if (n < 2) return 1.0;
    std::map<std::pair<std::size_t, std::size_t>, double> table;
    std::map<std::size_t, double> rows, cols;
    for (std::size_t i = 0; i < n; ++i) {
        table[{a[i], b[i]}] += 1.0;
        rows[a[i]] += 1.0;
        cols[b[i]] += 1.0;
    }
    auto pairs = [](double m) { return m * (m - 1.0) / 2.0; };
    double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& [key, m] : table) index += pairs(m);
    for (const auto& [key, m] : rows) sum_rows += pairs(m);
    for (const auto& [key, m] : cols) sum_cols += pairs(m);
    const double expected = sum_rows * sum_cols / pairs(static_cast<double>(n));
    const double max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index == expected) return 1.0;  // both partitions trivial
    return (index - expected) / (max_index - expected);
}

RunEvaluation evaluate_run(std::span<const BatchOutcome> outcomes, const ConceptModel& model,
                           const DriftScenario& scenario, const SyntheticStream& stream) {
    RunEvaluation ev;

    std::vector<std::size_t> truth_ids;
    std::vector<std::string> truth_labels;
    std::map<std::string, std::size_t> label_ids;
    for (const auto& id : model.history_ids) {
        auto it = stream.truth.find(id);
        if (it == stream.truth.end()) throw InvalidArgumentError("record '" + id + "' has no ground truth");
        truth_labels.push_back(it->second);
        truth_ids.push_back(label_ids.emplace(it->second, label_ids.size()).first->second);
    }
    ev.ari = adjusted_rand_index(model.history_assignments, truth_ids);
    for (const auto& [label, _] : label_ids) {
        ev.coverage.emplace(label, concept_coverage(model.history_assignments, truth_labels, label));
    }

    auto outcome_at = [&](std::size_t batch) -> const BatchOutcome* {
        for (const auto& o : outcomes) {
            if (o.batch == batch) return &o;
        }
        return nullptr;
    };

    for (const auto& event : scenario.events) {
        EventEvaluation e;
        e.at_batch = event.at_batch;
        const auto& comps = stream.components.at(event.at_batch - 1);
        Vector reference_mean;
        if (const auto* em = std::get_if<EmergeEvent>(&event.kind)) {
            e.label = em->blob.label;
            e.reference = em->blob.label;
            reference_mean = em->blob.mean;
        } else {
            const auto& sp = std::get<SplitEvent>(event.kind);
            e.label = sp.child_label;
            e.reference = sp.parent;
            reference_mean = find_component(comps, sp.parent)->mean;
        }
        const BatchOutcome* at_event = outcome_at(event.at_batch);
        if (!at_event) throw InvalidArgumentError("no outcome for event batch " + std::to_string(event.at_batch));
        e.expected_root = nearest_centroid(reference_mean, at_event->centroids_at_entry);

        for (std::size_t t = event.at_batch; t <= scenario.n_batches; ++t) {
            const BatchOutcome* o = outcome_at(t);
            if (!o) break;
            std::map<std::size_t, std::size_t> hits;
            for (const auto& [id, concept_id] : o->assignments) {
                auto it = stream.truth.find(id);
                if (it == stream.truth.end()) throw InvalidArgumentError("record '" + id + "' has no ground truth");
                if (it->second == e.label) ++hits[concept_id];
            }
            if (hits.empty()) continue;
            std::size_t dominant = hits.begin()->first, best = 0;
            for (const auto& [c, count] : hits) {
                if (count > best) {
                    best = count;
                    dominant = c;
                }
            }
            if (dominant >= at_event->k_before) {
                e.detected_at = t;
                e.latency = t - event.at_batch;
                e.concept_id = dominant;
                e.recorded_root = model.lineage.at(dominant).root;
                e.lineage_correct = e.recorded_root == e.expected_root;
                break;
            }
        }
        ev.events.push_back(std::move(e));
    }
    return ev;
}

}  // namespace driftmap
