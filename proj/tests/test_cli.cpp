#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include <array>
#include <cstdio>
#include <fstream>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "lsfix/csv.hpp"
#include "lsfix/parse.hpp"
#include "lsfix/repair.hpp"

// End-to-end runs of the installed binary against the sample data.

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

struct RunResult {
    int exit_code = -1;
    std::string out;
};

RunResult run(const std::string& args) {
    std::string command = std::string(LSFIX_BIN) + " " + args + " 2>/dev/null";
    std::array<char, 4096> buffer{};
    RunResult result;
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    while (fgets(buffer.data(), buffer.size(), pipe)) result.out += buffer.data();
    int status = pclose(pipe);
    result.exit_code = WEXITSTATUS(status);
    return result;
}

std::string sample(const std::string& name) { return std::string(LSFIX_SAMPLES) + "/" + name; }

std::string store_args() {
    return "--schema " + sample("store/schema.txt") + " --data " + sample("store/data") +
           " --ic " + sample("store/ic.txt");
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("lsfix_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("check reports inconsistency with violation counts") {
    RunResult r = run("check " + store_args());
    CHECK(r.exit_code == 1);
    json doc = json::parse(r.out);
    CHECK(doc["consistent"] == false);
    CHECK(doc["total_violations"] == 4);

    RunResult traffic = run("check --schema " + sample("traffic/schema.txt") + " --data " +
                            sample("traffic/data") + " --ic " + sample("traffic/ic.txt"));
    CHECK(traffic.exit_code == 1);
    CHECK(json::parse(traffic.out)["total_violations"] == 1);
}

TEST_CASE("violations dumps the labelled hypergraph") {
    RunResult r = run("violations " + store_args());
    CHECK(r.exit_code == 1);
    json doc = json::parse(r.out);
    CHECK(doc["vertices"].size() == 6);
    REQUIRE(doc["hyperedges"].size() == 4);
    CHECK(doc["hyperedges"][0]["constraint"] == "ic1");
}

TEST_CASE("exact fix finds both repairs and round-trips through check") {
    fs::path out = fresh_dir("exact_fix");
    RunResult r = run("fix --method exact " + store_args() + " --out " + out.string());
    REQUIRE(r.exit_code == 0);
    json doc = json::parse(r.out);
    CHECK(doc["distance"] == "10/1");
    CHECK(doc["fix_count"] == 2);

    for (const std::string sub : {"fix_1", "fix_2"}) {
        RunResult again = run("check --schema " + sample("store/schema.txt") + " --data " +
                              (out / sub).string() + " --ic " + sample("store/ic.txt"));
        CHECK(again.exit_code == 0);
        CHECK(json::parse(again.out)["consistent"] == true);
    }
}

TEST_CASE("greedy fix reproduces the documented trace") {
    RunResult r = run("fix --method greedy " + store_args());
    REQUIRE(r.exit_code == 0);
    json doc = json::parse(r.out);
    CHECK(doc["distance"] == "10/1");
    std::vector<std::string> picks;
    for (const auto& step : doc["trace"]) picks.push_back(step["chosen"].get<std::string>());
    CHECK(picks == std::vector<std::string>{"S3", "S5", "S1", "S4"});
}

TEST_CASE("fix with a distance bound answers the decision problem") {
    RunResult yes = run("fix --method exact --k 10 " + store_args());
    CHECK(json::parse(yes.out)["within_k"] == true);
    RunResult no = run("fix --method exact --k 9 " + store_args());
    CHECK(json::parse(no.out)["within_k"] == false);
}

TEST_CASE("cover methods refuse non-local constraint sets") {
    RunResult r = run("fix --method greedy --schema " + sample("nofix/schema.txt") + " --data " +
                      sample("nofix/data") + " --ic " + sample("nofix/ic.txt"));
    CHECK(r.exit_code == 3);
}

TEST_CASE("exact fix reports nonexistence") {
    RunResult r = run("fix --method exact --schema " + sample("nofix/schema.txt") + " --data " +
                      sample("nofix/data") + " --ic " + sample("nofix/ic.txt"));
    CHECK(r.exit_code == 5);
    CHECK(json::parse(r.out)["ne"] == false);
}

TEST_CASE("a tiny search budget exits with the cap code") {
    RunResult r = run("fix --method exact --max-grid 2 " + store_args());
    CHECK(r.exit_code == 4);
}

TEST_CASE("parse errors exit with code 2") {
    RunResult r = run("check --schema " + sample("store/ic.txt") + " --data " +
                      sample("store/data") + " --ic " + sample("store/ic.txt"));
    CHECK(r.exit_code == 2);
}

TEST_CASE("cqa over the store database") {
    RunResult keep = run("cqa --semantics skeptical --query " + sample("store/query_client3.txt") +
                         " " + store_args());
    CHECK(keep.exit_code == 0);
    CHECK(json::parse(keep.out)["answers"] == "yes");

    RunResult low_skeptical = run("cqa --semantics skeptical --query " +
                                  sample("store/query_client1_low.txt") + " " + store_args());
    CHECK(json::parse(low_skeptical.out)["answers"] == "no");
    RunResult low_brave = run("cqa --semantics brave --query " +
                              sample("store/query_client1_low.txt") + " " + store_args());
    CHECK(json::parse(low_brave.out)["answers"] == "yes");

    RunResult range = run("cqa --semantics range --query " + sample("store/query_sum_money.txt") +
                          " " + store_args());
    json doc = json::parse(range.out);
    CHECK(doc["glb"] == "1000/1");
    CHECK(doc["lub"] == "1002/1");
    CHECK(doc["fix_count"] == 2);
}

TEST_CASE("classify reports locality, classes and atom counts") {
    RunResult r = run("classify " + store_args());
    REQUIRE(r.exit_code == 0);
    json doc = json::parse(r.out);
    CHECK(doc["local"] == true);
    REQUIRE(doc["constraints"].size() == 2);
    CHECK(doc["constraints"][0]["one_atom"] == false);
    CHECK(doc["constraints"][1]["one_atom"] == true);
    CHECK(doc["constraints"][0]["class"] == "linear");

    RunResult nofix = run("classify --schema " + sample("nofix/schema.txt") + " --data " +
                          sample("nofix/data") + " --ic " + sample("nofix/ic.txt"));
    CHECK(json::parse(nofix.out)["local"] == false);
}

TEST_CASE("approx-sum reports the guarantee and a usable fix") {
    fs::path out = fresh_dir("approx");
    RunResult r = run("approx-sum --query " + sample("store/query_sum_money.txt") + " --schema " +
                      sample("store/schema.txt") + " --data " + sample("store/data") + " --ic " +
                      sample("store/ic_range_only.txt") + " --out " + out.string());
    REQUIRE(r.exit_code == 0);
    json doc = json::parse(r.out);
    // Each tuple has a unique cheapest repair here, so the bags are
    // singletons and the approximation is exact.
    CHECK(doc["guarantee_factor"] == "1/1");
    CHECK(doc["approx_value"].get<long long>() == 1000);

    RunResult again = run("check --schema " + sample("store/schema.txt") + " --data " +
                          (out / "chosen_fix").string() + " --ic " +
                          sample("store/ic_range_only.txt"));
    CHECK(again.exit_code == 0);
}

TEST_CASE("approx-sum on a tied point ban has a genuine 1/2 guarantee") {
    RunResult r = run("approx-sum --query " + sample("bans/query_sum_u.txt") + " --schema " +
                      sample("bans/schema.txt") + " --data " + sample("bans/data") + " --ic " +
                      sample("bans/ic.txt"));
    REQUIRE(r.exit_code == 0);
    json doc = json::parse(r.out);
    CHECK(doc["guarantee_factor"] == "1/2");  // two tied repairs, one atom
    CHECK(doc["approx_value"].get<long long>() == 6);  // picks u = 6 over u = 4
    CHECK(doc["k"] == 2);
    CHECK(doc["m"] == 1);
    CHECK(doc["system"]["bags"].size() == 1);
    CHECK(doc["system"]["bags"][0]["candidates"].size() == 2);
    CHECK(doc["system"]["equations"].size() == 2);
}

TEST_CASE("reduce-1ad dumps the per-key candidate bags") {
    RunResult r = run("reduce-1ad --schema " + sample("store/schema.txt") + " --data " +
                      sample("store/data") + " --ic " + sample("store/ic_range_only.txt"));
    REQUIRE(r.exit_code == 0);
    json doc = json::parse(r.out);
    CHECK(doc["feasible"] == true);
    REQUIRE(doc["bags"].size() == 6);

    RunResult multi = run("reduce-1ad " + store_args());
    CHECK(multi.exit_code == 3);  // two-atom constraint present
}

TEST_CASE("an empty constraint file is vacuously local and consistent") {
    fs::path dir = fresh_dir("empty_ic");
    std::ofstream(dir / "empty.txt") << "# nothing\n";
    RunResult r = run("classify --schema " + sample("store/schema.txt") + " --data " +
                      sample("store/data") + " --ic " + (dir / "empty.txt").string());
    REQUIRE(r.exit_code == 0);
    json doc = json::parse(r.out);
    CHECK(doc["local"] == true);
    CHECK(doc["constraints"].empty());

    RunResult check = run("check --schema " + sample("store/schema.txt") + " --data " +
                          sample("store/data") + " --ic " + (dir / "empty.txt").string());
    CHECK(check.exit_code == 0);
}

TEST_CASE("table output renders one line per field") {
    RunResult r = run("check --output table " + store_args());
    CHECK(r.exit_code == 1);
    CHECK(r.out.find("consistent: false") != std::string::npos);
}
