#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>

#include "tmpdir.hpp"
#include "vexad/errors.hpp"
#include "vexad/session.hpp"

using namespace vexad;

namespace {

std::shared_ptr<const Dataset> small_data(int n = 200, std::uint64_t seed = 3) {
    return std::make_shared<const Dataset>(generate_synthetic(n, 4, 0.1, seed));
}

SessionConfig cfg_for(SamplerKind k, int K, int T, std::uint64_t seed) {
    SessionConfig c;
    c.strategy = k;
    c.display_size = K;
    c.budget = T;
    c.seed = seed;
    c.split_seed = 1;
    return c;
}

void answer(Session& s) { s.submit_labels(simulated_oracle(s.dataset(), s.current_display())); }

constexpr SamplerKind kAll[] = {SamplerKind::vexad, SamplerKind::random, SamplerKind::maxmin, SamplerKind::uncertainty};

}  // namespace

TEST_CASE("first display is reproducible and depends on the seed") {
    const auto data = small_data();
    const auto c = cfg_for(SamplerKind::vexad, 16, 3, 42);
    const Session a(data, c), b(data, c);
    CHECK(a.displays() == b.displays());
    CHECK(a.current_display().size() == 16);
    CHECK(a.phase() == Phase::awaiting_labels);
    CHECK(a.iteration() == 0);

    for (auto [s1, s2] : {std::pair{1, 2}, {3, 4}, {100, 7}}) {
        const Session x(data, cfg_for(SamplerKind::vexad, 16, 3, s1)), y(data, cfg_for(SamplerKind::vexad, 16, 3, s2));
        CHECK(x.displays()[0] != y.displays()[0]);
    }
}

TEST_CASE("first display is shared by every strategy") {
    const auto data = small_data();
    const Session ref(data, cfg_for(SamplerKind::vexad, 8, 2, 9));
    for (auto k : kAll) CHECK(Session(data, cfg_for(k, 8, 2, 9)).displays()[0] == ref.displays()[0]);
}

TEST_CASE("display size equal to the pool shows everything") {
    const auto data = small_data();
    const Session s(data, cfg_for(SamplerKind::random, 100, 1, 5));
    std::vector<int> d(s.current_display().begin(), s.current_display().end());
    std::sort(d.begin(), d.end());
    CHECK(d == s.split().train_ids);
}

TEST_CASE("infeasible budgets are rejected") {
    const auto data = small_data();
    CHECK_THROWS_AS(Session(data, cfg_for(SamplerKind::random, 51, 2, 0)), std::invalid_argument);
    CHECK_THROWS_AS(Session(data, cfg_for(SamplerKind::random, 0, 2, 0)), std::invalid_argument);
    auto bad = cfg_for(SamplerKind::vexad, 4, 2, 0);
    bad.weights.gamma = 0;
    CHECK_THROWS(Session(data, bad));
}

TEST_CASE("counting contract for every strategy") {
    const auto data = small_data(80);
    for (auto k : kAll) {
        CAPTURE(to_string(k));
        Session s(data, cfg_for(k, 4, 3, 11));
        for (int t = 0; t < 3; ++t) {
            answer(s);
            CHECK(s.scorer().trained_on() == 4 * (t + 1));
            CHECK(s.iteration() == t + 1);
        }
        CHECK(s.phase() == Phase::finished);
        CHECK(s.current_display().empty());
        const auto ids = s.labeled_ids();
        CHECK(ids.size() == 12);
        CHECK(std::set<int>(ids.begin(), ids.end()).size() == 12);
        for (int id : ids) CHECK(std::binary_search(s.split().train_ids.begin(), s.split().train_ids.end(), id));
        REQUIRE(s.metrics().size() == 3);
        for (int t = 0; t < 3; ++t) {
            CHECK(s.metrics()[t].iter == t + 1);
            CHECK(s.metrics()[t].samp_pct == sampling_rate(t + 1, 4, 80));
            CHECK(s.metrics()[t].eer >= 0);
            CHECK(s.metrics()[t].eer <= 100);
        }
        CHECK(s.solve_reports().size() == (k == SamplerKind::vexad ? 2u : 0u));
        CHECK_THROWS_AS(answer(s), std::logic_error);
    }
}

TEST_CASE("single round trains on exactly one display") {
    const auto data = small_data();
    const Session s = run_simulated(data, cfg_for(SamplerKind::random, 16, 1, 2));
    CHECK(s.scorer().trained_on() == 16);
    CHECK(s.metrics().size() == 1);
}

TEST_CASE("simulated oracle answers with ground truth") {
    const auto data = small_data();
    const Session s(data, cfg_for(SamplerKind::random, 10, 1, 2));
    for (const auto& a : simulated_oracle(*data, s.current_display())) CHECK(a.label == data->samples[a.id].label);
}

TEST_CASE("invalid answers leave the session untouched") {
    const auto data = small_data();
    Session s(data, cfg_for(SamplerKind::vexad, 4, 3, 8));
    answer(s);
    const std::string before = s.to_json().dump();
    const auto good = simulated_oracle(*data, s.current_display());

    int outsider = 0;
    while (std::find(s.current_display().begin(), s.current_display().end(), outsider) != s.current_display().end())
        ++outsider;
    auto bad = good;
    bad[0].id = outsider;
    CHECK_THROWS_AS(s.submit_labels(bad), ValidationError);
    bad = good;
    bad[1].label = 0;
    CHECK_THROWS_AS(s.submit_labels(bad), ValidationError);
    bad = good;
    bad.pop_back();
    CHECK_THROWS_AS(s.submit_labels(bad), ValidationError);
    bad = good;
    bad.push_back(good[0]);
    CHECK_THROWS_AS(s.submit_labels(bad), ValidationError);
    CHECK(s.to_json().dump() == before);

    s.submit_labels(good);
    CHECK(s.iteration() == 2);
}

TEST_CASE("replay gives identical sessions") {
    const auto data = small_data();
    for (auto k : kAll) {
        const auto c = cfg_for(k, 8, 4, 21);
        const Session a = run_simulated(data, c), b = run_simulated(data, c);
        CHECK(a.displays() == b.displays());
        CHECK(a.metrics() == b.metrics());
        CHECK(a.to_json().dump() == b.to_json().dump());
    }
}

TEST_CASE("vexad on the default benchmark records every iteration") {
    const auto data = std::make_shared<const Dataset>(generate_synthetic(2200, 16, 39.0 / 2200.0, 7));
    SessionConfig c;
    c.seed = 7;
    c.split_seed = 7;
    const Session s = run_simulated(data, c);
    CHECK(s.phase() == Phase::finished);
    CHECK(s.metrics().size() == 10);
    CHECK(s.labeled_ids().size() == 160);
    CHECK(s.metrics().back().samp_pct == sampling_rate(10, 16, 2200));
}

TEST_CASE("save, load and continue matches an uninterrupted run") {
    const auto data = small_data();
    for (auto k : kAll) {
        const auto c = cfg_for(k, 6, 4, 31);
        const Session full = run_simulated(data, c);

        TempDir tmp;
        Session s(data, c);
        answer(s);
        s.save(tmp.path / "s.json");
        Session resumed = Session::load(tmp.path / "s.json", data);
        CHECK(resumed.to_json() == s.to_json());
        CHECK(resumed.phase() == Phase::awaiting_labels);
        while (resumed.phase() == Phase::awaiting_labels) answer(resumed);
        CHECK(resumed.metrics() == full.metrics());
        CHECK(resumed.displays() == full.displays());
        CHECK(resumed.scorer() == full.scorer());
    }
}

TEST_CASE("finished sessions round trip") {
    const auto data = small_data();
    const Session s = run_simulated(data, cfg_for(SamplerKind::maxmin, 5, 2, 1));
    const Session back = Session::from_json(s.to_json(), data);
    CHECK(back.phase() == Phase::finished);
    CHECK(back.to_json() == s.to_json());
}

TEST_CASE("broken session files are reported") {
    const auto data = small_data();
    TempDir tmp;
    Session s(data, cfg_for(SamplerKind::random, 5, 2, 1));
    s.save(tmp.path / "s.json");
    std::string text;
    {
        std::ifstream in(tmp.path / "s.json");
        text.assign(std::istreambuf_iterator<char>(in), {});
    }
    {
        std::ofstream out(tmp.path / "cut.json");
        out << text.substr(0, text.size() / 2);
    }
    CHECK_THROWS_AS(Session::load(tmp.path / "cut.json", data), ValidationError);
    CHECK_THROWS_AS(Session::load(tmp.path / "missing.json", data), ValidationError);

    auto j = s.to_json();
    j["version"] = 99;
    CHECK_THROWS_AS(Session::from_json(j, data), ValidationError);
    j = s.to_json();
    j["displays"][0][0] = -5;
    CHECK_THROWS_AS(Session::from_json(j, data), ValidationError);
    CHECK_THROWS_AS(Session::from_json(s.to_json(), small_data(200, 4)), ValidationError);
}

TEST_CASE("config json round trip") {
    auto c = cfg_for(SamplerKind::uncertainty, 7, 3, 123456789012345ULL);
    c.weights.rep_on = false;
    c.weights.alpha = 0.25;
    c.train.l2_strength = 0.5;
    c.dataset = "x";
    CHECK(session_config_from_json(to_json(c)) == c);
    CHECK_THROWS_AS(session_config_from_json(nlohmann::json{{"strategy", "nope"}}), ValidationError);
    CHECK_THROWS_AS(session_config_from_json(nlohmann::json{{"rep", 2}}), ValidationError);
}
