// lsfix: repair engine and consistent-query-answering front end for integer
// data under denial constraints.
//
// Subcommands: check | violations | fix | cqa | classify | approx-sum |
// reduce-1ad. Exit codes: 0 consistent/ok, 1 inconsistent, 2 parse or IO
// error, 3 unsupported method/constraint combination, 4 budget exceeded,
// 5 no fix exists.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "lsfix/cqa.hpp"
#include "lsfix/csv.hpp"
#include "lsfix/exact.hpp"
#include "lsfix/gf2.hpp"
#include "lsfix/parse.hpp"
#include "lsfix/repair.hpp"
#include "lsfix/setcover.hpp"

using json = nlohmann::json;
using namespace lsfix;

namespace {

constexpr int kExitConsistent = 0;
constexpr int kExitInconsistent = 1;
constexpr int kExitParse = 2;
constexpr int kExitUnsupported = 3;
constexpr int kExitCap = 4;
constexpr int kExitNoFix = 5;

struct Options {
    std::string schema_path;
    std::string data_dir;
    std::string ic_path;
    std::string query_path;
    std::string method = "exact";
    std::string semantics = "skeptical";
    std::string k;
    std::string out_dir;
    std::string output = "json";
    std::size_t max_grid = 10'000'000;
};

struct Inputs {
    Schema schema;
    Instance db;
    ConstraintSet ics;
    std::vector<DenialConstraint> denials;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Inputs load(const Options& opt, bool need_ics = true) {
    Inputs in;
    in.schema = parse_schema(slurp(opt.schema_path));
    in.db = read_instance(in.schema, opt.data_dir);
    if (need_ics || !opt.ic_path.empty()) {
        in.ics = parse_constraints(slurp(opt.ic_path), in.schema);
        for (const auto* d : in.ics.denials()) in.denials.push_back(*d);
    }
    return in;
}

FixSearchConfig search_config(const Options& opt) {
    FixSearchConfig cfg;
    cfg.max_grid_points = opt.max_grid;
    return cfg;
}

json value_json(const Value& v) {
    if (is_int(v)) return as_int(v);
    return as_sym(v);
}

json tuple_json(const Tuple& t) {
    json values = json::array();
    for (const auto& v : t.values) values.push_back(value_json(v));
    return json{{"relation", t.relation}, {"values", values}};
}

json answers_json(const AnswerSet& a) {
    if (a.is_boolean) return a.boolean_value ? "yes" : "no";
    json rows = json::array();
    for (const auto& row : a.rows) {
        json r = json::array();
        for (const auto& v : row.values) r.push_back(value_json(v));
        if (row.aggregate) r.push_back(row.aggregate->str());
        rows.push_back(std::move(r));
    }
    return rows;
}

void emit(const Options& opt, const json& doc) {
    if (opt.output == "json") {
        std::cout << doc.dump(2) << "\n";
        return;
    }
    // Plain table rendering: one "key: value" line per top-level entry;
    // arrays are printed compactly.
    for (const auto& [key, value] : doc.items())
        std::cout << key << ": " << (value.is_string() ? value.get<std::string>() : value.dump())
                  << "\n";
}

void write_fix_csv(const Instance& fix, const std::filesystem::path& dir) {
    write_instance(fix, dir);
}

int cmd_check(const Options& opt) {
    Inputs in = load(opt);
    json per_constraint = json::array();
    std::size_t total_violations = 0;
    bool consistent = true;
    for (const auto& c : in.ics.constraints) {
        json entry;
        entry["label"] = constraint_label(c);
        entry["class"] = denial_class_str(classify_constraint(c));
        if (const auto* d = std::get_if<DenialConstraint>(&c)) {
            auto vs = violation_sets(in.db, *d);
            entry["satisfied"] = vs.empty();
            entry["violations"] = vs.size();
            total_violations += vs.size();
            consistent = consistent && vs.empty();
        } else {
            bool ok = satisfies(in.db, c);
            entry["satisfied"] = ok;
            entry["violations"] = ok ? 0 : 1;
            total_violations += ok ? 0 : 1;
            consistent = consistent && ok;
        }
        per_constraint.push_back(std::move(entry));
    }
    emit(opt, json{{"consistent", consistent},
                   {"total_violations", total_violations},
                   {"constraints", per_constraint}});
    return consistent ? kExitConsistent : kExitInconsistent;
}

int cmd_violations(const Options& opt) {
    Inputs in = load(opt);
    ConflictHypergraph g = conflict_hypergraph(in.db, in.denials);
    json vertices = json::array();
    auto tuples = in.db.all_tuples();
    for (std::size_t tid = 0; tid < tuples.size(); ++tid) {
        json v = tuple_json(*tuples[tid]);
        v["tid"] = tid;
        vertices.push_back(std::move(v));
    }
    json edges = json::array();
    for (std::size_t e = 0; e < g.edges.size(); ++e)
        edges.push_back(json{{"id", e},
                             {"constraint", g.edges[e].constraint},
                             {"tuples", g.edges[e].tuples}});
    json aggregation = json::array();
    bool agg_ok = true;
    for (const auto& c : in.ics.constraints)
        if (const auto* ac = std::get_if<AggregationConstraint>(&c)) {
            bool ok = satisfies(in.db, *ac);
            agg_ok = agg_ok && ok;
            aggregation.push_back(json{{"label", ac->label}, {"satisfied", ok}});
        }
    emit(opt, json{{"vertices", vertices},
                   {"hyperedges", edges},
                   {"aggregation_constraints", aggregation}});
    return (g.edges.empty() && agg_ok) ? kExitConsistent : kExitInconsistent;
}

int cmd_fix(const Options& opt) {
    Inputs in = load(opt);
    if (in.ics.has_aggregation())
        throw UnsupportedConstraint("fix search under aggregation constraints is undecidable");
    FixSearchConfig cfg = search_config(opt);

    json summary;
    summary["method"] = opt.method;
    std::vector<Instance> fixes;
    json trace = json::array();

    if (opt.method == "exact") {
        FixResult result = ls_fixes(in.db, in.denials, cfg);
        if (result.fixes.empty()) {
            emit(opt, json{{"method", "exact"}, {"ne", false}, {"fix_count", 0}});
            return kExitNoFix;
        }
        fixes = result.fixes;
        summary["distance"] = result.min_distance->str();
        summary["bound_factor"] = 1.0;
    } else if (opt.method == "1ad") {
        fixes = enumerate_fixes_1ad(in.db, in.denials, cfg);
        if (fixes.empty()) {
            emit(opt, json{{"method", "1ad"}, {"ne", false}, {"fix_count", 0}});
            return kExitNoFix;
        }
        summary["distance"] = distance(in.db, fixes.front()).str();
        summary["bound_factor"] = 1.0;
    } else if (opt.method == "greedy" || opt.method == "primal-dual") {
        CoverInstance ci = build_mwscp(in.db, in.denials, cfg.assignment_budget);
        Cover cover = opt.method == "greedy" ? greedy_cover(ci) : primal_dual_cover(ci);
        for (const auto& step : cover.trace)
            trace.push_back(json{{"step", step.step},
                                 {"chosen", "S" + std::to_string(step.chosen + 1)},
                                 {"ratio", step.ratio.str()}});
        Cover normalized = star_normalize(cover, ci, in.db, in.denials);
        Instance repaired = apply_cover(in.db, normalized, ci);
        summary["distance"] = distance(in.db, repaired).str();
        if (opt.method == "greedy") {
            double n = static_cast<double>(std::max<std::size_t>(ci.element_count(), 1));
            summary["bound_factor"] = 1.0 + std::log(n);
        } else {
            summary["bound_factor"] = static_cast<double>(ci.max_frequency());
        }
        summary["trace"] = trace;
        fixes.push_back(std::move(repaired));
    } else {
        throw UnsupportedConstraint("unknown method " + opt.method);
    }

    summary["fix_count"] = fixes.size();
    summary["ne"] = true;
    if (!opt.k.empty()) {
        Rational bound = Rational::parse(opt.k);
        Rational best = Rational::parse(summary["distance"].get<std::string>());
        summary["within_k"] = best <= bound;
    }
    if (!opt.out_dir.empty()) {
        std::filesystem::path base(opt.out_dir);
        for (std::size_t i = 0; i < fixes.size(); ++i)
            write_fix_csv(fixes[i], base / ("fix_" + std::to_string(i + 1)));
        summary["out"] = opt.out_dir;
    }
    emit(opt, summary);
    return kExitConsistent;
}

Semantics parse_semantics(const std::string& text) {
    if (text == "skeptical") return Semantics::Skeptical;
    if (text == "brave") return Semantics::Brave;
    if (text == "majority") return Semantics::Majority;
    if (text == "range") return Semantics::Range;
    throw UnsupportedConstraint("unknown semantics " + text);
}

int cmd_cqa(const Options& opt) {
    Inputs in = load(opt);
    if (in.ics.has_aggregation())
        throw UnsupportedConstraint("consistent answers under aggregation constraints are undecidable");
    FixSearchConfig cfg = search_config(opt);
    FixMethod method;
    if (opt.method == "exact") method = FixMethod::Exact;
    else if (opt.method == "1ad") method = FixMethod::OneAtom;
    else throw UnsupportedConstraint("cqa supports the exact and 1ad methods");

    ParsedQuery pq = parse_query(slurp(opt.query_path), in.schema);
    Semantics semantics = parse_semantics(opt.semantics);

    if (semantics == Semantics::Range) {
        if (!std::holds_alternative<ConjunctiveQuery>(pq))
            throw UnsupportedConstraint("range semantics expects a scalar aggregate query");
        const auto& q = std::get<ConjunctiveQuery>(pq);
        if (!q.aggregate || !q.scalar())
            throw UnsupportedConstraint("range semantics expects a scalar aggregate query");
        std::vector<Instance> fixes = enumerate_fixes(in.db, in.denials, method, cfg);
        if (fixes.empty()) {
            emit(opt, json{{"semantics", "range"}, {"fix_count", 0}, {"ne", false}});
            return kExitNoFix;
        }
        auto [glb, lub] = cqa_range(q, in.db, in.denials, cfg, method);
        emit(opt, json{{"semantics", "range"},
                       {"fix_count", fixes.size()},
                       {"glb", glb.str()},
                       {"lub", lub.str()}});
        return kExitConsistent;
    }

    if (const auto* acq = std::get_if<AggregateComparisonQuery>(&pq)) {
        std::vector<Instance> fixes = enumerate_fixes(in.db, in.denials, method, cfg);
        std::size_t n = fixes.size();
        std::size_t sat = 0;
        for (const auto& fix : fixes)
            if (eval_aggregate_comparison(*acq, fix).value) ++sat;
        bool yes = false;
        switch (semantics) {
            case Semantics::Skeptical: yes = sat == n; break;
            case Semantics::Brave: yes = sat > 0; break;
            case Semantics::Majority: yes = 2 * sat > n; break;
            case Semantics::Range: break;
        }
        emit(opt, json{{"semantics", semantics_str(semantics)},
                       {"fix_count", n},
                       {"answers", yes ? "yes" : "no"}});
        return kExitConsistent;
    }

    const auto& q = std::get<ConjunctiveQuery>(pq);
    CQAResult result = cqa(q, in.db, in.denials, semantics, cfg, method);
    emit(opt, json{{"semantics", semantics_str(semantics)},
                   {"fix_count", result.fix_count},
                   {"answers", answers_json(result.answers)}});
    return kExitConsistent;
}

int cmd_classify(const Options& opt) {
    Inputs in = load(opt);
    json constraints = json::array();
    for (const auto& c : in.ics.constraints) {
        json entry;
        entry["label"] = constraint_label(c);
        entry["class"] = denial_class_str(classify_constraint(c));
        if (const auto* d = std::get_if<DenialConstraint>(&c)) entry["one_atom"] = d->one_atom();
        constraints.push_back(std::move(entry));
    }
    LocalityReport locality = is_local(in.denials, in.schema);
    json doc{{"constraints", constraints},
             {"local", locality.local},
             {"diagnostics", locality.diagnostics}};
    if (!opt.query_path.empty()) {
        ParsedQuery pq = parse_query(slurp(opt.query_path), in.schema);
        const ConjunctiveQuery& q = std::holds_alternative<ConjunctiveQuery>(pq)
                                        ? std::get<ConjunctiveQuery>(pq)
                                        : std::get<AggregateComparisonQuery>(pq).query;
        JoinGraph g = join_graph(q.nam(), in.schema);
        json arcs = json::array();
        for (auto [a, b] : g.arcs) arcs.push_back(json::array({a, b}));
        CTreeReport report = in_ctree(q, in.schema);
        doc["query"] = json{{"in_ctree", report.in_ctree},
                            {"reason", report.reason},
                            {"join_graph",
                             json{{"atoms", g.atom_count},
                                  {"arcs", arcs},
                                  {"self_loops", std::vector<std::size_t>(g.self_loops.begin(),
                                                                          g.self_loops.end())}}}};
    }
    emit(opt, doc);
    return kExitConsistent;
}

int cmd_approx_sum(const Options& opt) {
    Inputs in = load(opt);
    if (in.ics.has_aggregation())
        throw UnsupportedConstraint("the approximation runs under denial constraints only");
    FixSearchConfig cfg = search_config(opt);
    ParsedQuery pq = parse_query(slurp(opt.query_path), in.schema);
    if (!std::holds_alternative<ConjunctiveQuery>(pq))
        throw UnsupportedConstraint("approx-sum expects a scalar sum query");
    const auto& q = std::get<ConjunctiveQuery>(pq);
    if (!q.aggregate || q.aggregate->func != AggFunc::Sum || !q.scalar())
        throw UnsupportedConstraint("approx-sum expects a scalar sum query");

    KeyRepairInstance reduced = reduce_1ad(in.db, in.denials, cfg);
    if (!reduced.feasible()) {
        emit(opt, json{{"ne", false}});
        return kExitNoFix;
    }
    GF2System sys = build_rwae2(q, in.db, in.denials, cfg);
    DerandomizedResult result = derandomize(sys);
    Instance chosen = assignment_to_fix(in.db, sys, result.assignment);

    json bags = json::array();
    for (const auto& bag : sys.bags) {
        json key = json::array();
        for (const auto& v : bag.key) key.push_back(value_json(v));
        json candidates = json::array();
        for (const auto& t : bag.candidates) candidates.push_back(tuple_json(t));
        bags.push_back(json{{"relation", bag.relation}, {"key", key}, {"candidates", candidates}});
    }
    json equations = json::array();
    for (const auto& eq : sys.equations) {
        json requirements = json::array();
        for (const auto& [bag, cand] : eq.requirements)
            requirements.push_back(json{{"bag", bag}, {"candidate", cand}});
        equations.push_back(json{{"requirements", requirements}, {"weight", eq.weight}});
    }
    json selection = json::array();
    for (auto c : result.assignment.selection) selection.push_back(c);

    json doc{{"approx_value", result.weight},
             {"guarantee_factor", guarantee(sys).str()},
             {"k", sys.k},
             {"m", sys.m},
             {"system", json{{"bags", bags}, {"equations", equations}}},
             {"selection", selection}};
    if (!opt.out_dir.empty()) {
        write_fix_csv(chosen, std::filesystem::path(opt.out_dir) / "chosen_fix");
        doc["out"] = opt.out_dir;
    }
    emit(opt, doc);
    return kExitConsistent;
}

int cmd_reduce_1ad(const Options& opt) {
    Inputs in = load(opt);
    FixSearchConfig cfg = search_config(opt);
    KeyRepairInstance reduced = reduce_1ad(in.db, in.denials, cfg);
    json bags = json::array();
    for (const auto& bag : reduced.bags) {
        json candidates = json::array();
        for (const auto& t : bag.candidates) candidates.push_back(tuple_json(t));
        json key = json::array();
        for (const auto& v : bag.key) key.push_back(value_json(v));
        bags.push_back(json{{"relation", bag.relation},
                            {"key", key},
                            {"consistent", bag.was_consistent},
                            {"candidates", candidates}});
    }
    emit(opt, json{{"feasible", reduced.feasible()}, {"bags", bags}});
    if (!opt.out_dir.empty()) {
        // Base instance with one row per candidate; duplicate keys are the
        // point of the reduction, so this bypasses Instance validation.
        std::filesystem::path dir(opt.out_dir);
        std::filesystem::create_directories(dir);
        for (const auto& rs : in.schema.relations) {
            std::ofstream out(dir / (rs.name + ".csv"));
            for (std::size_t i = 0; i < rs.attributes.size(); ++i)
                out << (i ? "," : "") << rs.attributes[i].name;
            out << "\n";
            for (const auto& bag : reduced.bags)
                if (bag.relation == rs.name)
                    for (const auto& t : bag.candidates) {
                        for (std::size_t i = 0; i < t.values.size(); ++i)
                            out << (i ? "," : "") << value_str(t.values[i]);
                        out << "\n";
                    }
        }
    }
    return reduced.feasible() ? kExitConsistent : kExitNoFix;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"least-squares repair and consistent query answering for integer data"};
    app.require_subcommand(1);

    Options opt;
    auto add_common = [&](CLI::App* sub, bool needs_ic = true) {
        sub->add_option("--schema", opt.schema_path, "schema file")->required();
        sub->add_option("--data", opt.data_dir, "directory with <relation>.csv files")->required();
        auto* ic = sub->add_option("--ic", opt.ic_path, "constraints file");
        if (needs_ic) ic->required();
        sub->add_option("--max-grid", opt.max_grid, "search budget");
        sub->add_option("--output", opt.output, "json or table")
            ->check(CLI::IsMember({"json", "table"}));
        sub->add_option("--out", opt.out_dir, "directory for emitted CSV files");
    };

    CLI::App* check = app.add_subcommand("check", "report constraint satisfaction");
    add_common(check);

    CLI::App* violations = app.add_subcommand("violations", "dump the conflict hypergraph");
    add_common(violations);

    CLI::App* fix = app.add_subcommand("fix", "compute repairs");
    add_common(fix);
    fix->add_option("--method", opt.method, "exact | greedy | primal-dual | 1ad")
        ->check(CLI::IsMember({"exact", "greedy", "primal-dual", "1ad"}));
    fix->add_option("--k", opt.k, "distance bound to test (rational)");

    CLI::App* cqa_cmd = app.add_subcommand("cqa", "consistent query answers");
    add_common(cqa_cmd);
    cqa_cmd->add_option("--query", opt.query_path, "query file")->required();
    cqa_cmd->add_option("--semantics", opt.semantics, "skeptical | brave | majority | range")
        ->check(CLI::IsMember({"skeptical", "brave", "majority", "range"}));
    cqa_cmd->add_option("--method", opt.method, "exact | 1ad")
        ->check(CLI::IsMember({"exact", "1ad"}));

    CLI::App* classify = app.add_subcommand("classify", "classify constraints and queries");
    add_common(classify);
    classify->add_option("--query", opt.query_path, "query file");

    CLI::App* approx = app.add_subcommand("approx-sum", "derandomized aggregate approximation");
    add_common(approx);
    approx->add_option("--query", opt.query_path, "scalar sum query file")->required();

    CLI::App* reduce = app.add_subcommand("reduce-1ad", "key-repair reduction");
    add_common(reduce);

    CLI11_PARSE(app, argc, argv);

    try {
        if (check->parsed()) return cmd_check(opt);
        if (violations->parsed()) return cmd_violations(opt);
        if (fix->parsed()) return cmd_fix(opt);
        if (cqa_cmd->parsed()) return cmd_cqa(opt);
        if (classify->parsed()) return cmd_classify(opt);
        if (approx->parsed()) return cmd_approx_sum(opt);
        if (reduce->parsed()) return cmd_reduce_1ad(opt);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const CapExceeded& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCap;
    } catch (const UnsupportedConstraint& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUnsupported;
    } catch (const ModelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    }
    return kExitParse;
}
