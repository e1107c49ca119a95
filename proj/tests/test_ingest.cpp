#include <catch2/catch_amalgamated.hpp>

#include "pcqm/ingest.hpp"
#include "pcqm/text.hpp"

using namespace pcqm;
using ingest::StemMap;
using simulate::StudyWindow;
using Catch::Matchers::ContainsSubstring;

namespace {

std::string write_tmp(const std::string& name, const std::string& content) {
    const std::string path = "/tmp/pcqm_ingest_" + name;
    text::write_file(path, content);
    return path;
}

}  // namespace

TEST_CASE("stem map loading") {
    StudyWindow win{0, 0, 100, 100};
    auto path = write_tmp("ok.csv", "species,x,y\nacru,1.5,2.5\nacru,3.0,4.0\nqual,50,60\n");
    auto map = ingest::load_stem_map(path, win);
    REQUIRE(map.records.size() == 3);
    CHECK(map.records[0].species == "acru");
    CHECK(map.records[2].x == 50.0);
}

TEST_CASE("strict mode rejects out-of-window rows with the line number") {
    StudyWindow win{0, 0, 100, 100};
    auto path = write_tmp("oow.csv", "species,x,y\nacru,1,1\nacru,250,4\n");
    CHECK_THROWS_MATCHES(ingest::load_stem_map(path, win), config_error,
                         Catch::Matchers::MessageMatches(ContainsSubstring("line 3")));

    // lenient mode drops and counts
    std::vector<std::string> warnings;
    auto map = ingest::load_stem_map(path, win, false, &warnings);
    CHECK(map.records.size() == 1);
    REQUIRE_FALSE(warnings.empty());
    CHECK_THAT(warnings[0], ContainsSubstring("1"));
}

TEST_CASE("header-only file loads empty with a warning") {
    StudyWindow win{0, 0, 100, 100};
    auto path = write_tmp("empty.csv", "species,x,y\n");
    std::vector<std::string> warnings;
    auto map = ingest::load_stem_map(path, win, true, &warnings);
    CHECK(map.records.empty());
    CHECK_FALSE(warnings.empty());
}

TEST_CASE("missing columns are an ingestion error") {
    StudyWindow win{0, 0, 100, 100};
    auto path = write_tmp("cols.csv", "species,x\nacru,1\n");
    CHECK_THROWS_AS(ingest::load_stem_map(path, win), config_error);
}

TEST_CASE("abundance filter") {
    StemMap m;
    m.window = {0, 0, 600, 600};
    for (int i = 0; i < 600; ++i) m.records.push_back({"alpha", i * 0.5, 1.0});
    for (int i = 0; i < 500; ++i) m.records.push_back({"beta", i * 0.5, 2.0});
    for (int i = 0; i < 100; ++i) m.records.push_back({"gamma", i * 0.5, 3.0});

    auto abundant = ingest::filter_abundant(m, 500);
    REQUIRE(abundant.size() == 2);
    CHECK(abundant[0] == "alpha");
    CHECK(abundant[1] == "beta");

    CHECK(ingest::filter_abundant(m, 1).size() == 3);
    // one species of 499 stems: strict threshold excludes it
    StemMap small;
    small.window = m.window;
    for (int i = 0; i < 499; ++i) small.records.push_back({"only", i * 0.5, 1.0});
    CHECK(ingest::filter_abundant(small, 500).empty());

    // monotonicity: a lower threshold never loses species
    auto k1 = ingest::filter_abundant(m, 100);
    auto k2 = ingest::filter_abundant(m, 550);
    for (const auto& code : k2) CHECK(std::find(k1.begin(), k1.end(), code) != k1.end());
}

TEST_CASE("species patterns partition the records") {
    StemMap m;
    m.window = {0, 0, 10, 10};
    m.records = {{"a", 1, 1}, {"b", 2, 2}, {"a", 3, 3}};
    auto pa = ingest::species_pattern(m, "a");
    auto pb = ingest::species_pattern(m, "b");
    CHECK(pa.points.size() == 2);
    CHECK(pb.points.size() == 1);
    CHECK(pa.points.size() + pb.points.size() == m.records.size());
    CHECK_THROWS_AS(ingest::species_pattern(m, "zz"), config_error);
}

TEST_CASE("true density is count over area") {
    StudyWindow win{0, 0, 600, 600};
    simulate::PointPattern p({{1, 1}, {2, 2}, {3, 3}}, win);
    CHECK(ingest::true_density(p) == 3.0 / 360000.0);
    simulate::PointPattern empty({}, win);
    CHECK(ingest::true_density(empty) == 0.0);
}

TEST_CASE("stem csv round trip") {
    StemMap m;
    m.window = {0, 0, 10, 10};
    m.records = {{"a", 1.25, 1.375}, {"b", 2.5, 9.875}};
    auto path = write_tmp("rt.csv", ingest::stem_map_to_csv(m));
    auto back = ingest::load_stem_map(path, m.window);
    REQUIRE(back.records.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(back.records[i].species == m.records[i].species);
        CHECK(back.records[i].x == m.records[i].x);
        CHECK(back.records[i].y == m.records[i].y);
    }
}
