#include "doctest.h"

#include "homloop/errors.hpp"
#include "homloop_cli/config.hpp"
#include "homloop_cli/output.hpp"

#include <cmath>
#include <string>

using namespace homloop;
using namespace homloop::cli;

namespace {

ErrorCode parse_error(const std::string& text, std::string* message = nullptr) {
    try {
        (void)parse_config(text, "test.cfg");
    } catch (const Error& e) {
        if (message) *message = e.what();
        return e.code();
    }
    FAIL("expected a ConfigParse error");
    return ErrorCode::InvalidSystem;
}

}  // namespace

TEST_CASE("configuration defaults and sections") {
    const ExperimentConfig c = parse_config(R"(
# comment line
[system]
builtin = duffing-rescaled   # trailing comment
[perturbation]
kind = x_cos
omega = 2
epsilon = 1e-4
[session]
mu = 0.03125
seed = 42
containment = true
[grid]
d = [1e-2,
     1e-3]
tau = [0, 1.5]
direction = fwd
[tolerances]
rtol = 1e-10
[output]
prefix = "run_"
)");
    CHECK(c.system.builtin == "duffing-rescaled");
    CHECK(c.perturbation.omega == 2.0);
    CHECK(c.session.mu == 0.03125);
    CHECK(c.session.seed == 42);
    CHECK(c.session.containment);
    CHECK(c.grid.d == std::vector<double>{1e-2, 1e-3});
    CHECK(c.grid.tau == std::vector<double>{0.0, 1.5});
    CHECK(c.grid.forward);
    CHECK_FALSE(c.grid.backward);
    CHECK(c.tolerances.rtol == 1e-10);
    CHECK(c.tolerances.atol == 1e-15);
    CHECK(c.output.prefix == "run_");
    const PiecewiseSystem sys = c.build_system();
    CHECK(sys.epsilon() == 1e-4);
    CHECK(sys.period().value() == doctest::Approx(M_PI));

    const ExperimentConfig def = parse_config("");
    CHECK(def.system.builtin == "duffing");
    CHECK(def.grid.d.size() == 5);
    CHECK(def.session.mu == 1.0 / 16.0);
}

TEST_CASE("configuration errors name the field") {
    std::string msg;
    CHECK(parse_error("[grid]\nd = [1e-3, -1e-3]\n", &msg) == ErrorCode::ConfigParse);
    CHECK(msg.find("grid.d[1]") != std::string::npos);
    CHECK(parse_error("[grid]\nd = []\n", &msg) == ErrorCode::ConfigParse);
    CHECK(msg.find("grid.d") != std::string::npos);
    CHECK(parse_error("[perturbation]\nepsilon = -1\n", &msg) == ErrorCode::ConfigParse);
    CHECK(msg.find("perturbation.epsilon") != std::string::npos);
    CHECK(parse_error("[grid]\nfoo = 1\n", &msg) == ErrorCode::ConfigParse);
    CHECK(msg.find("grid.foo") != std::string::npos);
    CHECK(parse_error("[nowhere]\n", &msg) == ErrorCode::ConfigParse);
    CHECK(parse_error("d = [1]\n") == ErrorCode::ConfigParse);
    CHECK(parse_error("[grid]\nd = [1e-3, 1e-3]\n") == ErrorCode::ConfigParse);
    CHECK(parse_error("[grid]\nd = [1e-3\n") == ErrorCode::ConfigParse);
    CHECK(parse_error("[grid]\nd = [1e-3]\nd = [1e-4]\n") == ErrorCode::ConfigParse);
    CHECK(parse_error("[session]\nn_loops = 0\n", &msg) == ErrorCode::ConfigParse);
    CHECK(msg.find("session.n_loops") != std::string::npos);
    CHECK(parse_error("[system]\nf_plus_x = [[1, 0]]\n", &msg) == ErrorCode::ConfigParse);
    CHECK(msg.find("system.f_plus_x[0]") != std::string::npos);
    CHECK_THROWS_AS((void)load_config("/nonexistent/file.cfg"), Error);
    const ExperimentConfig bad = parse_config("[system]\nbuiltin = nonsense\n");
    CHECK_THROWS_AS((void)bad.build_system(), Error);
    const ExperimentConfig missing = parse_config("[system]\nbuiltin = custom\n");
    CHECK_THROWS_AS((void)missing.build_system(), Error);
}

TEST_CASE("inline polynomial systems match the built-in Duffing oscillator") {
    const ExperimentConfig c = parse_config(R"(
[system]
builtin = custom
name = poly-duffing
f_plus_x = [[1, 0, 1]]
f_plus_y = [[1, 1, 0], [-1, 2, 0]]
f_minus_x = [[1, 0, 1]]
f_minus_y = [[1, 1, 0], [-1, 2, 0]]
G = [[-1, 0, 1]]
[perturbation]
kind = polynomial
g_y = [[1, 1, 0, 1, 0]]
epsilon = 1e-3
)");
    const PiecewiseSystem p = c.build_system();
    const PiecewiseSystem ref = builtin::duffing(perturbations::x_cos(), 1e-3);
    CHECK(p.name() == "poly-duffing");
    CHECK(p.period().value() == doctest::Approx(2.0 * M_PI));
    for (const Point2 x : {Point2{0.3, -0.2}, Point2{1.2, 0.4}, Point2{-0.5, 0.1}}) {
        for (double t : {0.0, 0.7, 3.0}) {
            for (Side s : {Side::Plus, Side::Minus}) {
                CHECK(norm(p.field(s, t, x) - ref.field(s, t, x)) < 1e-15);
                const Mat2 a = p.field_jac(s, t, x), b = ref.field_jac(s, t, x);
                CHECK(std::abs(a.a11 - b.a11) + std::abs(a.a12 - b.a12) + std::abs(a.a21 - b.a21) +
                          std::abs(a.a22 - b.a22) <
                      1e-12);
            }
        }
        CHECK(p.G(x) == ref.G(x));
    }
    CHECK(eval_poly({{2.0, 2, 1, 0.0, 0.0}}, {3.0, 5.0}) == 90.0);
    const Point2 g = grad_poly({{2.0, 2, 1, 0.0, 0.0}}, {3.0, 5.0});
    CHECK(g.x1 == 60.0);
    CHECK(g.x2 == 18.0);
}

TEST_CASE("deterministic writers") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(-1.2) == "-1.2");
    CHECK(format_double(std::nan("")) == "nan");
    ojson j{{"b", 0.1}, {"a", {1, 2.5}}, {"s", "x"}, {"n", std::nan("")}, {"e", ojson::object()}};
    CHECK(dump_json(j) ==
          "{\n  \"b\": 0.10000000000000001,\n  \"a\": [\n    1,\n    2.5\n  ],\n  \"s\": \"x\",\n  \"n\": null,\n"
          "  \"e\": {}\n}\n");
    CsvTable t({"x", "label"});
    t.set_provenance(ojson{{"cascade", {{"beta", 0.05}}}});
    t.add_row({0.1, "a,b"});
    t.add_row({std::int64_t{3}, "plain"});
    CHECK(t.str() == "# cascade.beta = 0.050000000000000003\nx,label\n0.10000000000000001,\"a,b\"\n3,plain\n");
    CHECK_THROWS((void)t.add_row({1.0}));
}
