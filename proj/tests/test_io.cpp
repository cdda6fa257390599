#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <string>

#include "config.hpp"
#include "io.hpp"

using namespace jumplab;

TEST_CASE("config parsing: keys, comments, errors") {
    const std::string text =
        "# a comment\n"
        "kernel.alpha = 0.5\n"
        "kernel.profile.family = power_law   # trailing comment\n"
        "sampler.t_grid = 1, 2, 4\n"
        "flag = true\n"
        "\n";
    Config c = Config::parse_text(text);
    CHECK(c.get_double("kernel.alpha") == 0.5);
    CHECK(c.get_string("kernel.profile.family") == "power_law");
    CHECK(c.get_list("sampler.t_grid") == std::vector<double>{1.0, 2.0, 4.0});
    CHECK(c.get_bool("flag", false));
    CHECK(c.get_double("missing", 7.0) == 7.0);
    CHECK_THROWS_AS(c.get_double("missing"), JlError);

    CHECK_THROWS_AS(Config::parse_text("not a key value line\n"), JlError);
    try {
        Config::parse_text("ok = 1\nbroken line\n");
    } catch (const JlError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        CHECK(e.code() == Err::parse);
    }
    Config bad = Config::parse_text("x = 1.5zz\n");
    CHECK_THROWS_AS(bad.get_double("x"), JlError);
}

TEST_CASE("config digest: canonical, excludes scheduling knobs") {
    Config a = Config::parse_text("kernel.alpha = 0.5\nseed = 1\n");
    Config b = Config::parse_text("seed = 1\nkernel.alpha = 0.5\nthreads = 7\noutput.dir = /x\n");
    CHECK(a.digest() == b.digest());
    Config c = Config::parse_text("kernel.alpha = 0.5\nseed = 2\n");
    CHECK(a.digest() != c.digest());
}

TEST_CASE("kernel and sampler from config") {
    Config c = Config::parse_text(
        "kernel.dimension = 2\n"
        "kernel.alpha = 0.7\n"
        "kernel.kappa = 1.5\n"
        "kernel.c_tail = 0.5\n"
        "kernel.profile.family = poly_log\n"
        "kernel.profile.param = 0.5\n"
        "sampler.t_grid = 1, 4\n"
        "sampler.n_paths = 10\n"
        "seed = 9\n");
    JumpKernel k = kernel_from_config(c);
    CHECK(k.d == 2);
    CHECK(k.alpha == 0.7);
    CHECK(k.profile.family == ProfileFamily::poly_log);
    SamplerConfig s = sampler_from_config(c);
    CHECK(s.master_seed == 9);
    CHECK(s.n_paths == 10);

    Config bad = Config::parse_text("kernel.profile.family = nope\n");
    CHECK_THROWS_AS(kernel_from_config(bad), JlError);
}

TEST_CASE("full-precision formatting round-trips") {
    for (double v : {1.0 / 3.0, 2.0, 1e-17, 123456.789012345678, -0.1}) {
        const std::string s = format_full(v);
        CHECK(std::stod(s) == v);
        CHECK(s.find(',') == std::string::npos);
    }
}

TEST_CASE("csv build and parse round trip") {
    CsvBuilder b({"a", "b"});
    b.add({format_full(1.5), "x"});
    b.add({format_full(2.5), "y"});
    const std::string text = b.str(0xabcdef12345678ULL);
    CHECK(text.find("# config_digest=00abcdef12345678") == 0);
    CsvTable t = parse_csv(text);
    CHECK(t.has_digest);
    CHECK(t.digest == 0xabcdef12345678ULL);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.col("b") == 1);
    CHECK(t.rows[1][0] == "2.5");
    CHECK_THROWS_AS(b.add({"only-one"}), JlError);
}

TEST_CASE("svg rendering: determinism and input validation") {
    PlotSpec spec;
    spec.title = "t";
    spec.logx = spec.logy = true;
    PlotSeries s;
    s.name = "series";
    s.x = {1.0, 10.0, 100.0};
    s.y = {1.0, 0.1, 0.0};  // zero must be skipped on a log axis
    spec.series.push_back(s);
    spec.spans.push_back({"zone", 1.0, 10.0, 0, ""});
    const std::string svg1 = render_svg(spec, 42);
    const std::string svg2 = render_svg(spec, 42);
    CHECK(svg1 == svg2);
    CHECK(svg1.find("config_digest=000000000000002a") != std::string::npos);
    CHECK(svg1.find("zone") != std::string::npos);
    CHECK(svg1.rfind("</svg>\n") == svg1.size() - 7);

    PlotSpec empty;
    CHECK_THROWS_AS(render_svg(empty, 0), JlError);
    PlotSpec allzero;
    PlotSeries z;
    z.x = {1.0};
    z.y = {0.0};
    allzero.logy = true;
    allzero.series.push_back(z);
    CHECK_THROWS_AS(render_svg(allzero, 0), JlError);
}

TEST_CASE("paths file: binary round trip and csv shape") {
    PathsFile pf;
    pf.digest = 99;
    pf.d = 2;
    pf.times = {0.0, 1.0, 2.0};
    pf.n_paths = 2;
    pf.data = {0, 0, 1, 1, 2, 2, 0, 0, -1, -1, -2, -2};
    const std::string tmp = "test_paths_roundtrip.bin";
    write_paths_binary(tmp, pf);
    PathsFile r = read_paths_binary(tmp);
    CHECK(r.digest == 99);
    CHECK(r.d == 2);
    CHECK(r.times == pf.times);
    CHECK(r.data == pf.data);
    std::remove(tmp.c_str());

    const std::string csv = paths_to_csv(pf);
    CHECK(csv.find("path_index,t,x_1,x_2") != std::string::npos);
    CHECK(parse_csv(csv).rows.size() == 6);

    CHECK_THROWS_AS(read_paths_binary("does_not_exist.bin"), JlError);
}
