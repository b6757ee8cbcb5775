#include "filtrationlab/runner.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

namespace filtrationlab {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------------------------
// Line index: records the line on which each field path starts.

class CountingIterator {
public:
    using iterator_category = std::forward_iterator_tag;
    using value_type = char;
    using difference_type = std::ptrdiff_t;
    using pointer = const char*;
    using reference = const char&;

    CountingIterator() = default;
    CountingIterator(const char* p, std::size_t* count) : p_(p), count_(count) {}
    reference operator*() const { return *p_; }
    CountingIterator& operator++() {
        ++p_;
        ++*count_;
        return *this;
    }
    CountingIterator operator++(int) {
        auto copy = *this;
        ++*this;
        return copy;
    }
    bool operator==(const CountingIterator& o) const { return p_ == o.p_; }
    bool operator!=(const CountingIterator& o) const { return p_ != o.p_; }

private:
    const char* p_ = nullptr;
    std::size_t* count_ = nullptr;
};

class LineIndex : public nlohmann::json_sax<json> {
public:
    LineIndex(const std::string& text, const std::size_t* consumed) : text_(text), consumed_(consumed) {}

    int line_of(const std::string& path) const {
        auto it = lines_.find(path);
        return it == lines_.end() ? 0 : it->second;
    }

    bool null() override { return value(); }
    bool boolean(bool) override { return value(); }
    bool number_integer(number_integer_t) override { return value(); }
    bool number_unsigned(number_unsigned_t) override { return value(); }
    bool number_float(number_float_t, const string_t&) override { return value(); }
    bool string(string_t&) override { return value(); }
    bool binary(binary_t&) override { return value(); }
    bool start_object(std::size_t) override {
        value();
        frames_.push_back({false, -1, {}});
        return true;
    }
    bool key(string_t& k) override {
        frames_.back().key = k;
        lines_.emplace(path(), current_line());
        return true;
    }
    bool end_object() override {
        frames_.pop_back();
        return true;
    }
    bool start_array(std::size_t) override {
        value();
        frames_.push_back({true, -1, {}});
        return true;
    }
    bool end_array() override {
        frames_.pop_back();
        return true;
    }
    bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception&) override { return false; }

private:
    struct Frame {
        bool array;
        int index;
        std::string key;
    };

    bool value() {
        if (!frames_.empty() && frames_.back().array) {
            ++frames_.back().index;
            lines_.emplace(path(), current_line());
        }
        return true;
    }

    std::string path() const {
        std::string p;
        for (const auto& f : frames_) {
            if (f.array)
                p += "[" + std::to_string(f.index) + "]";
            else
                p += (p.empty() ? "" : ".") + f.key;
        }
        return p;
    }

    int current_line() const {
        const std::size_t end = std::min(*consumed_, text_.size());
        return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + static_cast<std::ptrdiff_t>(end), '\n'));
    }

    const std::string& text_;
    const std::size_t* consumed_;
    std::vector<Frame> frames_;
    std::map<std::string, int> lines_;
};

// ---------------------------------------------------------------------------------------------
// Typed field access with diagnostics.

class Reader {
public:
    Reader(const json& node, std::string path, const LineIndex& index) : node_(node), path_(std::move(path)), index_(index) {}

    [[noreturn]] void fail(const std::string& field, const std::string& message) const {
        const std::string p = field.empty() ? path_ : child_path(field);
        const int line = index_.line_of(p);
        std::ostringstream os;
        os << "schema error";
        if (line > 0)
            os << " at line " << line;
        os << ", field '" << (p.empty() ? "<root>" : p) << "': " << message;
        throw SchemaError(os.str());
    }

    void require_object() const {
        if (!node_.is_object())
            fail("", "expected an object");
    }

    void allow_only(std::initializer_list<const char*> names) const {
        for (const auto& [k, v] : node_.items()) {
            (void)v;
            if (std::none_of(names.begin(), names.end(), [&](const char* n) { return k == n; }))
                fail(k, "unknown field");
        }
    }

    bool has(const char* field) const { return node_.contains(field) && !node_.at(field).is_null(); }

    Reader child(const char* field) const { return Reader(node_.at(field), child_path(field), index_); }
    Reader element(std::size_t i) const {
        return Reader(node_.at(i), path_ + "[" + std::to_string(i) + "]", index_);
    }
    const json& node() const { return node_; }
    const std::string& path() const { return path_; }

    template <class T>
    void get(const char* field, T& out) const {
        if (!has(field))
            return;
        const json& v = node_.at(field);
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean())
                fail(field, "expected a boolean");
            out = v.get<bool>();
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer())
                fail(field, "expected an integer");
            if (std::is_unsigned_v<T> && v.get<long long>() < 0)
                fail(field, "expected a nonnegative integer");
            out = v.get<T>();
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number())
                fail(field, "expected a number");
            out = v.get<T>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string())
                fail(field, "expected a string");
            out = v.get<std::string>();
        } else {
            static_assert(sizeof(T) == 0, "unsupported field type");
        }
    }

    template <std::size_t N>
    void get_array(const char* field, std::array<double, N>& out) const {
        if (!has(field))
            return;
        const json& v = node_.at(field);
        if (!v.is_array() || v.size() != N)
            fail(field, "expected an array of " + std::to_string(N) + " numbers");
        for (std::size_t i = 0; i < N; ++i) {
            if (!v[i].is_number())
                fail(field, "expected an array of " + std::to_string(N) + " numbers");
            out[i] = v[i].get<double>();
        }
    }

private:
    std::string child_path(const std::string& field) const { return path_.empty() ? field : path_ + "." + field; }

    const json& node_;
    std::string path_;
    const LineIndex& index_;
};

ScenarioDescriptor read_descriptor(const Reader& r) {
    r.require_object();
    r.allow_only({"kind", "horizon", "lambda", "lambda_high", "alpha", "alphas", "coin_p", "f_trivial",
                  "shock_hazards", "seed", "max_branching", "labels", "zero_mode", "signal_probability",
                  "max_atoms"});
    if (!r.has("kind"))
        r.fail("kind", "missing");
    ScenarioDescriptor d;
    std::string kind;
    r.get("kind", kind);
    try {
        d.kind = scenario_kind_from_string(kind);
    } catch (const Error& e) {
        r.fail("kind", e.what());
    }
    r.get("horizon", d.horizon);
    r.get("lambda", d.lambda);
    r.get("lambda_high", d.lambda_high);
    r.get("alpha", d.alpha);
    r.get_array("alphas", d.alphas);
    r.get("coin_p", d.coin_p);
    r.get("f_trivial", d.f_trivial);
    r.get_array("shock_hazards", d.shock_hazards);
    r.get("seed", d.seed);
    r.get("max_branching", d.max_branching);
    r.get("labels", d.labels);
    std::string zero = to_string(d.zero_mode);
    r.get("zero_mode", zero);
    try {
        d.zero_mode = zero_mode_from_string(zero);
    } catch (const Error& e) {
        r.fail("zero_mode", e.what());
    }
    r.get("signal_probability", d.signal_probability);
    r.get("max_atoms", d.max_atoms);
    return d;
}

ExpectedVerdict read_expected(const Reader& r) {
    r.require_object();
    r.allow_only({"invariant", "failed_clause", "pseudo_stopping", "reference_is_invariance_measure"});
    ExpectedVerdict e;
    const auto opt_bool = [&](const char* f, std::optional<bool>& out) {
        if (r.has(f)) {
            bool b = false;
            r.get(f, b);
            out = b;
        }
    };
    opt_bool("invariant", e.invariant);
    opt_bool("pseudo_stopping", e.pseudo_stopping);
    opt_bool("reference_is_invariance_measure", e.reference_is_invariance_measure);
    if (r.has("failed_clause")) {
        std::string c;
        r.get("failed_clause", c);
        static const char* clauses[] = {"none", "positivity", "true_martingale", "condition_B", "direct_check"};
        if (std::none_of(std::begin(clauses), std::end(clauses), [&](const char* n) { return c == n; }))
            r.fail("failed_clause", "unknown clause '" + c + "'");
        e.failed_clause = c;
    }
    return e;
}

BsdeParams read_bsde(const Reader& r) {
    r.require_object();
    r.allow_only({"r", "s", "c", "dt", "recovery", "recovery_slope"});
    BsdeParams p;
    r.get("r", p.driver.r);
    r.get("s", p.driver.s);
    r.get("c", p.driver.c);
    r.get("dt", p.driver.dt);
    r.get("recovery", p.recovery);
    r.get("recovery_slope", p.recovery_slope);
    if (p.driver.dt <= 0.0)
        r.fail("dt", "must be positive");
    return p;
}

json descriptor_json(const ScenarioDescriptor& d) {
    return json{{"kind", to_string(d.kind)},
                {"horizon", d.horizon},
                {"lambda", d.lambda},
                {"lambda_high", d.lambda_high},
                {"alpha", d.alpha},
                {"alphas", d.alphas},
                {"coin_p", d.coin_p},
                {"f_trivial", d.f_trivial},
                {"shock_hazards", d.shock_hazards},
                {"seed", d.seed},
                {"max_branching", d.max_branching},
                {"labels", d.labels},
                {"zero_mode", to_string(d.zero_mode)},
                {"signal_probability", d.signal_probability},
                {"max_atoms", d.max_atoms}};
}

json expected_json(const ExpectedVerdict& e) {
    json j = json::object();
    if (e.invariant)
        j["invariant"] = *e.invariant;
    if (e.failed_clause)
        j["failed_clause"] = *e.failed_clause;
    if (e.pseudo_stopping)
        j["pseudo_stopping"] = *e.pseudo_stopping;
    if (e.reference_is_invariance_measure)
        j["reference_is_invariance_measure"] = *e.reference_is_invariance_measure;
    return j;
}

json bsde_params_json(const BsdeParams& p) {
    return json{{"r", p.driver.r}, {"s", p.driver.s},           {"c", p.driver.c},
                {"dt", p.driver.dt}, {"recovery", p.recovery}, {"recovery_slope", p.recovery_slope}};
}

json paths_json(const Paths<double>& m, int rows) {
    json out = json::array();
    for (int t = 0; t < rows; ++t) {
        json row = json::array();
        for (Eigen::Index a = 0; a < m.cols(); ++a)
            row.push_back(m(t, a));
        out.push_back(std::move(row));
    }
    return out;
}

json time_json(const RandomTime& tau) {
    json out = json::array();
    for (int v : tau.values())
        out.push_back(v == kNever ? json(nullptr) : json(v));
    return out;
}

json check_json(const MartingaleCheck<double>& c) {
    return json{{"holds", c.holds}, {"residual", c.residual}, {"worst_t", c.worst_t}, {"worst_atom", c.worst_atom}};
}

/// Spanning F-martingales for the Jeulin–Yor check: the martingale part of S, a spread selection of at most
/// `limit` one-jump martingales, and one seeded random combination of all of them.
std::vector<Process> jy_family(const EnlargementPair& pair, const AzemaBundle& b, std::uint64_t seed, int limit) {
    const auto& space = pair.space();
    const auto& w = space.weights();
    std::vector<Process> out{b.mart_part};
    const auto all = elementary_martingales(space, Filt::F, pair.maturity());
    const std::size_t step = std::max<std::size_t>(1, all.size() / static_cast<std::size_t>(limit));
    for (std::size_t i = 0; i < all.size(); i += step)
        out.push_back(materialize(space, Filt::F, w, all[i]));

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Paths<double> m = Paths<double>::Zero(pair.horizon() + 1, pair.atoms());
    for (int t = 1; t <= pair.maturity(); ++t) {
        const Partition& cells = space.partition(Filt::F, t);
        Row<double> x(pair.atoms());
        for (int c = 0; c < cells.cells(); ++c) {
            const double v = u(rng);
            for (int a : cells.members(c))
                x(a) = v;
        }
        x -= cond_exp(x, space.partition(Filt::F, t - 1), w);
        m.row(t) = m.row(t - 1) + x;
    }
    for (int t = pair.maturity() + 1; t <= pair.horizon(); ++t)
        m.row(t) = m.row(t - 1);
    out.emplace_back(m, Filt::F, ProcessClass::optional);
    return out;
}

struct Residuals {
    std::map<std::string, double> values;
    void add(const std::string& key, double v) { values[key] = std::max(values[key], v); }
    double max() const {
        double m = 0.0;
        for (const auto& [k, v] : values) {
            (void)k;
            m = std::max(m, v);
        }
        return m;
    }
};

std::string verdict_string(const std::optional<bool>& invariant) {
    if (!invariant)
        return "-";
    return *invariant ? "invariant" : "not_invariant";
}

} // namespace

std::vector<ScenarioEntry> parse_scenarios(const std::string& text) {
    std::size_t consumed = 0;
    LineIndex index(text, &consumed);
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
        throw SchemaError("schema error at line " + std::to_string(line) + ": malformed JSON (" + e.what() + ")");
    }
    json::sax_parse(CountingIterator(text.data(), &consumed), CountingIterator(text.data() + text.size(), &consumed),
                    &index);

    const Reader r(root, "", index);
    r.require_object();
    r.allow_only({"schema_version", "scenarios"});
    int version = kSchemaVersion;
    r.get("schema_version", version);
    if (version != kSchemaVersion)
        r.fail("schema_version", "unsupported version " + std::to_string(version));
    if (!r.has("scenarios") || !root.at("scenarios").is_array())
        r.fail("scenarios", "expected an array");

    std::vector<ScenarioEntry> out;
    const Reader list = r.child("scenarios");
    std::map<std::string, int> seen;
    for (std::size_t i = 0; i < root.at("scenarios").size(); ++i) {
        const Reader e = list.element(i);
        e.require_object();
        e.allow_only({"id", "descriptor", "expected", "bsde"});
        ScenarioEntry entry;
        if (!e.has("id"))
            e.fail("id", "missing");
        e.get("id", entry.id);
        if (entry.id.empty() || entry.id.find_first_of("/\\") != std::string::npos)
            e.fail("id", "must be a nonempty name without path separators");
        if (!seen.emplace(entry.id, static_cast<int>(i)).second)
            e.fail("id", "duplicate id '" + entry.id + "'");
        if (!e.has("descriptor"))
            e.fail("descriptor", "missing");
        entry.descriptor = read_descriptor(e.child("descriptor"));
        if (e.has("expected"))
            entry.expected = read_expected(e.child("expected"));
        if (e.has("bsde"))
            entry.bsde = read_bsde(e.child("bsde"));
        out.push_back(std::move(entry));
    }
    return out;
}

std::vector<ScenarioEntry> load_scenarios(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw SchemaError("cannot read scenario file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenarios(ss.str());
}

std::string dump_scenarios(const std::vector<ScenarioEntry>& entries) {
    json list = json::array();
    for (const auto& e : entries) {
        json j{{"id", e.id}, {"descriptor", descriptor_json(e.descriptor)}};
        if (e.expected)
            j["expected"] = expected_json(*e.expected);
        if (e.bsde)
            j["bsde"] = bsde_params_json(*e.bsde);
        list.push_back(std::move(j));
    }
    return json{{"schema_version", kSchemaVersion}, {"scenarios", list}}.dump(2) + "\n";
}

Suite suite_from_string(const std::string& name) {
    if (name == "azema")
        return Suite::azema;
    if (name == "invariance")
        return Suite::invariance;
    if (name == "bsde")
        return Suite::bsde;
    if (name == "all")
        return Suite::all;
    throw Error("unknown suite '" + name + "'");
}

ScenarioOutcome run_scenario(const ScenarioEntry& entry, Suite suite, double tol, std::uint64_t seed) {
    ScenarioOutcome out;
    out.id = entry.id;
    const auto start = std::chrono::steady_clock::now();
    const bool do_azema = suite == Suite::azema || suite == Suite::all;
    const bool do_inv = suite == Suite::invariance || suite == Suite::all;
    const bool do_bsde = suite == Suite::bsde || suite == Suite::all;

    json report{{"schema_version", kSchemaVersion}, {"scenario_id", entry.id},
                {"descriptor", descriptor_json(entry.descriptor)}};
    Residuals res;
    Scenario s;
    try {
        s = generate(entry.descriptor, entry.id);
    } catch (const Error& e) {
        out.matched = false;
        out.generation_error = true;
        out.mismatches.push_back(std::string("generation failed: ") + e.what());
        return out;
    }
    const ExpectedVerdict expected = entry.expected.value_or(s.expected);
    out.expected = verdict_string(expected.invariant);
    const auto& pair = s.pair;
    const auto mismatch = [&](const std::string& what) {
        out.matched = false;
        out.mismatches.push_back(what);
    };

    try {
        const ConditionB cb = check_condition_B(pair.space(), pair.theta());
        report["space"] = json{{"atoms", pair.atoms()},
                               {"horizon", pair.horizon()},
                               {"maturity", pair.maturity()},
                               {"generation_attempts", s.attempts},
                               {"theta", time_json(pair.theta())}};
        report["condition_B"] = json{{"holds", cb.holds}, {"detail", cb.describe()}};
        const AzemaBundle b = azema_bundle(pair);

        if (do_azema) {
            const int rows = pair.horizon() + 1;
            const auto ids = azema_identities(pair, b);
            double jy = 0.0;
            for (const auto& m : jy_family(pair, b, seed, 32))
                jy = std::max(jy, jeulin_yor_residual(pair, b, m));
            res.add("azema.decomposition", ids.decomposition);
            res.add("azema.SS", ids.SS);
            res.add("azema.multdec", ids.multdec);
            res.add("azema.pS_zero_mart", ids.pS_zero_mart);
            res.add("azema.compensator", ids.compensator);
            res.add("azema.jeulin_yor", jy);
            if (!(ids.S_before_theta > 0.0))
                mismatch("S vanishes right before theta");
            report["azema"] = json{{"S", paths_json(b.S.values(), rows)},
                                   {"pS", paths_json(b.pS.values(), rows)},
                                   {"mart_part", paths_json(b.mart_part.values(), rows)},
                                   {"D", paths_json(b.D.values(), rows)},
                                   {"Qcal", paths_json(b.Qcal.values(), rows)},
                                   {"Dcal", paths_json(b.Dcal.values(), rows)},
                                   {"survival_exp", paths_json(b.survival_exp.values(), rows)},
                                   {"v", paths_json(b.v.values(), rows)},
                                   {"varsigma", time_json(b.varsigma)},
                                   {"sigma3", time_json(b.sigma3)},
                                   {"min_S_before_theta", ids.S_before_theta},
                                   {"residuals",
                                    {{"decomposition", ids.decomposition},
                                     {"SS", ids.SS},
                                     {"multdec", ids.multdec},
                                     {"pS_zero_mart", ids.pS_zero_mart},
                                     {"compensator", ids.compensator},
                                     {"jeulin_yor", jy}}}};
        }

        std::optional<DensityPair> witness;
        if (do_inv || do_bsde) {
            const InvarianceReport inv = decide(pair, b, tol);
            witness = inv.witness;
            const bool invariant = inv.verdict == Verdict::invariant;
            out.verdict = verdict_string(invariant);
            if (do_inv) {
                for (const auto& [k, v] : inv.residuals)
                    res.add("invariance." + k, v);
                const auto bridge = survival_measure_bridge(pair, b);
                res.add("invariance.bridge_projection", bridge.projection_gap);
                res.add("invariance.bridge_martingale", bridge.martingale.residual);
                if (bridge.restriction_applicable)
                    res.add("invariance.bridge_restriction", bridge.restriction_gap);

                if (expected.invariant && *expected.invariant != invariant)
                    mismatch("verdict " + verdict_string(invariant) + ", expected " + verdict_string(expected.invariant));
                if (expected.failed_clause && *expected.failed_clause != to_string(inv.failed_clause))
                    mismatch(std::string("failed clause ") + to_string(inv.failed_clause) + ", expected " +
                             *expected.failed_clause);
                if (expected.pseudo_stopping && *expected.pseudo_stopping != inv.pseudo_stopping.A_inf_equals_1)
                    mismatch(std::string("pseudo-stopping ") + (inv.pseudo_stopping.A_inf_equals_1 ? "true" : "false") +
                             ", expected " + (*expected.pseudo_stopping ? "true" : "false"));
                if (expected.reference_is_invariance_measure &&
                    *expected.reference_is_invariance_measure != inv.pseudo_stopping.Q_mart_zero)
                    mismatch("reference measure invariance does not match");

                const auto& tm = inv.true_martingale;
                report["invariance"] = json{
                    {"verdict", out.verdict},
                    {"failed_clause", to_string(inv.failed_clause)},
                    {"residuals", inv.residuals},
                    {"positivity",
                     {{"exp_positive", inv.positivity.exp_positive},
                      {"pS_zero_at_varsigma", inv.positivity.pS_zero_at_varsigma},
                      {"varsigma_predictable", inv.positivity.varsigma_predictable}}},
                    {"true_martingale",
                     {{"automatic", tm.automatic},
                      {"E_identity_gap", tm.E_identity_gap},
                      {"sfcnd_bound", tm.sfcnd_bound},
                      {"sigma_n_bound", tm.sigma_n_bound},
                      {"ncsfcnd_residuals", tm.ncsfcnd_residuals},
                      {"residuals_monotone", tm.residuals_monotone},
                      {"residuals_vanish", tm.residuals_vanish}}},
                    {"pseudo_stopping",
                     {{"A_inf_equals_1", inv.pseudo_stopping.A_inf_equals_1},
                      {"Q_mart_zero", inv.pseudo_stopping.Q_mart_zero},
                      {"mass_A_inf_not_1", inv.pseudo_stopping.mass_A_inf_not_1}}},
                    {"survival_bridge",
                     {{"projection_gap", bridge.projection_gap},
                      {"martingale", check_json(bridge.martingale)},
                      {"restriction_applicable", bridge.restriction_applicable},
                      {"restriction_gap", bridge.restriction_gap}}},
                    {"witness_q_T", witness ? json(std::vector<double>(witness->q().values().row(pair.maturity()).begin(),
                                                                        witness->q().values().row(pair.maturity()).end()))
                                            : json(nullptr)},
                    {"expected", expected_json(expected)},
                    {"note", inv.note}};
            }
        }

        if (do_bsde) {
            const BsdeParams params = entry.bsde.value_or(BsdeParams{});
            const auto spec = BsdeSpec::make(pair, b, params.driver, params.recovery, params.recovery_slope);
            const auto sol = solve_all(pair, b, spec, witness);
            res.add("bsde.full", sol.full_residual);
            res.add("bsde.reduced_Q", sol.reduced_Q_residual);
            res.add("bsde.reduce_gap", sol.reduce_gap);
            res.add("bsde.transfer", sol.transfer_gap);
            res.add("bsde.drift_identity", sol.drift_identity_gap);
            json r{{"full", sol.full_residual},
                   {"reduced_Q", sol.reduced_Q_residual},
                   {"reduce_gap", sol.reduce_gap},
                   {"transfer_gap", sol.transfer_gap},
                   {"drift_identity_gap", sol.drift_identity_gap}};
            if (sol.reduced_P_residual) {
                res.add("bsde.reduced_P", *sol.reduced_P_residual);
                res.add("bsde.transfer_P", *sol.transfer_gap_P);
                r["reduced_P"] = *sol.reduced_P_residual;
                r["transfer_gap_P"] = *sol.transfer_gap_P;
            }
            std::ostringstream csv;
            write_csv(csv, pair, sol);
            out.bsde_csv = csv.str();
            report["bsde"] = json{{"params", bsde_params_json(params)},
                                  {"Z0", sol.Z(0, 0)},
                                  {"residuals", r},
                                  {"csv", entry.id + ".bsde.csv"}};
        }
    } catch (const std::exception& e) {
        mismatch(std::string("verification error: ") + e.what());
    }

    out.max_residual = res.max();
    for (const auto& [k, v] : res.values)
        if (!(v <= tol)) {
            std::ostringstream os;
            os << "residual " << k << " = " << v << " exceeds tol " << tol;
            mismatch(os.str());
        }
    report["max_residual"] = out.max_residual;
    report["tol"] = tol;
    report["matched"] = out.matched;
    report["mismatches"] = out.mismatches;
    out.report = report.dump(2) + "\n";
    out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return out;
}

int run(const RunConfig& config, std::ostream& log) {
    namespace fs = std::filesystem;
    std::vector<ScenarioEntry> entries;
    try {
        entries = load_scenarios(config.scenarios);
    } catch (const SchemaError& e) {
        log << config.scenarios << ": " << e.what() << "\n";
        return 2;
    }
    if (config.format != "csv" && config.format != "json") {
        log << "unknown format '" << config.format << "'\n";
        return 2;
    }
    std::error_code ec;
    fs::create_directories(config.out, ec);
    if (ec) {
        log << "cannot create output directory '" << config.out << "': " << ec.message() << "\n";
        return 2;
    }

    std::vector<ScenarioOutcome> outcomes(entries.size());
    std::atomic<std::size_t> next{0};
    std::mutex write_mutex;
    bool io_error = false;
    const auto write_file = [&](const fs::path& path, const std::string& text) {
        std::lock_guard<std::mutex> lock(write_mutex);
        std::ofstream f(path, std::ios::binary);
        f << text;
        if (!f) {
            io_error = true;
            log << "cannot write '" << path.string() << "'\n";
        }
    };
    const auto worker = [&] {
        for (std::size_t i = next++; i < entries.size(); i = next++) {
            outcomes[i] = run_scenario(entries[i], config.suite, config.tol, config.seed);
            if (!outcomes[i].report.empty())
                write_file(fs::path(config.out) / (entries[i].id + ".json"), outcomes[i].report);
            if (!outcomes[i].bsde_csv.empty())
                write_file(fs::path(config.out) / (entries[i].id + ".bsde.csv"), outcomes[i].bsde_csv);
        }
    };
    const int jobs = std::max(1, std::min<int>(config.jobs, static_cast<int>(std::max<std::size_t>(1, entries.size()))));
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();

    std::ostringstream summary;
    if (config.format == "csv") {
        summary << "scenario_id,verdict,expected,max_residual,wall_ms\n";
        summary.precision(17);
        for (const auto& o : outcomes)
            summary << o.id << ',' << o.verdict << ',' << o.expected << ',' << o.max_residual << ','
                    << std::fixed << std::setprecision(3) << o.wall_ms << std::defaultfloat << std::setprecision(17)
                    << '\n';
    } else {
        json rows = json::array();
        for (const auto& o : outcomes)
            rows.push_back(json{{"scenario_id", o.id},
                                {"verdict", o.verdict},
                                {"expected", o.expected},
                                {"max_residual", o.max_residual},
                                {"wall_ms", o.wall_ms},
                                {"matched", o.matched}});
        summary << json{{"schema_version", kSchemaVersion}, {"scenarios", rows}}.dump(2) << "\n";
    }
    write_file(fs::path(config.out) / (config.format == "csv" ? "summary.csv" : "summary.json"), summary.str());

    bool generation_error = false, mismatch = false;
    for (const auto& o : outcomes) {
        for (const auto& m : o.mismatches)
            log << o.id << ": " << m << "\n";
        generation_error = generation_error || o.generation_error;
        mismatch = mismatch || !o.matched;
    }
    if (io_error || generation_error)
        return 2;
    if (mismatch)
        return 1;
    log << outcomes.size() << " scenario(s) matched\n";
    return 0;
}

} // namespace filtrationlab
