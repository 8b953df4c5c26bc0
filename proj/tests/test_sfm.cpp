#include "test_support.hpp"

#include <sfmap/error.hpp>
#include <sfmap/sfm.hpp>

#include <doctest.h>

#include <numbers>
#include <sstream>

using namespace sfmap;
using doctest::Approx;

namespace {

TriMesh transformed(const TriMesh& mesh, const ShapeTransform& t)
{
    return TriMesh::from_data(transform_mesh(mesh.to_data(), t));
}

ShapeSpec capsule(double height)
{
    ShapeSpec spec;
    spec.kind = ShapeKind::spherocylinder;
    spec.height = height;
    spec.segments = 32;
    spec.rings = 8;
    return spec;
}

ShapeSpec sheet(double bend)
{
    ShapeSpec spec;
    spec.kind = ShapeKind::bent_sheet;
    spec.width = 2.3;
    spec.length = 1.0;
    spec.nx = 23;
    spec.ny = 10;
    spec.bend_angle = bend;
    return spec;
}

} // namespace

TEST_CASE("computed maps have a unit corner and bounded entries")
{
    ShapeSpec uv;
    uv.kind = ShapeKind::uvsphere;
    for (const TriMesh& mesh : {test::bumpy_sphere(3, 2), test::make(test::torus_spec()), test::make(capsule(1.0)),
             test::make(sheet(1.0)), test::make(uv)}) {
        const SelfFunctionalMap map = compute_sfm(mesh, {}, "x");
        CHECK(map.m() == 7);
        CHECK(map.n() == 7);
        CHECK(map.mesh_id == "x");
        CHECK(map.C(0, 0) == Approx(1.0).epsilon(1e-9));
        CHECK(map.C.cwiseAbs().maxCoeff() <= 1.0 + 1e-6);
    }
}

TEST_CASE("round sphere: both pencils nearly coincide")
{
    // m = n = 9 covers the l <= 2 harmonics completely; a truncated
    // degenerate cluster would make C arbitrary inside it.
    SfmOptions options;
    options.n = options.m = 9;
    const SelfFunctionalMap map = compute_sfm(test::make(test::icosphere_spec(3)), options);
    CHECK((map.C.transpose() * map.C - Eigen::MatrixXd::Identity(9, 9)).cwiseAbs().maxCoeff() <= 0.05);
}

TEST_CASE("non-square maps")
{
    SfmOptions options;
    options.n = 5;
    options.m = 8;
    const SelfFunctionalMap map = compute_sfm(test::bumpy_sphere(2, 3), options);
    CHECK(map.m() == 8);
    CHECK(map.n() == 5);
    options.n = 0;
    CHECK_THROWS_AS(compute_sfm(test::bumpy_sphere(2, 3), options), ArgumentError);
}

TEST_CASE("sign alignment special cases")
{
    std::mt19937_64 rng(1);
    const Eigen::MatrixXd C = test::random_matrix(7, 7, rng);

    SignVectors self = sign_align(C, C);
    CHECK(self.residual == 0.0);
    CHECK(self.a == Eigen::VectorXd::Ones(7));
    CHECK(self.b == Eigen::VectorXd::Ones(7));

    SignVectors negated = sign_align(C, -C);
    CHECK(negated.residual == 0.0);
    CHECK(negated.a == Eigen::VectorXd::Ones(7));
    CHECK(negated.b == -Eigen::VectorXd::Ones(7));

    CHECK_THROWS_AS(sign_align(C, Eigen::MatrixXd::Zero(7, 6)), ArgumentError);
    CHECK_THROWS_AS(sign_align(Eigen::MatrixXd::Zero(2, 21), Eigen::MatrixXd::Zero(2, 21)), ArgumentError);
}

TEST_CASE("sign alignment recovers planted flips")
{
    std::mt19937_64 rng(2024);
    int exact = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Eigen::MatrixXd C = test::random_matrix(7, 7, rng);
        Eigen::VectorXd a = test::random_signs(7, rng);
        Eigen::VectorXd b = test::random_signs(7, rng);
        const Eigen::MatrixXd planted = a.asDiagonal() * C * b.asDiagonal();
        const SignVectors found = sign_align(C, planted);
        if (a[0] < 0) {
            a = -a;
            b = -b;
        }
        if (found.residual == 0.0 && found.a == a && found.b == b
            && apply_signs(planted, found).isApprox(C, 0.0)) {
            ++exact;
        }
    }
    CHECK(exact == 1000);
}

TEST_CASE("sign alignment matches brute force")
{
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::MatrixXd R = test::random_matrix(4, 4, rng);
        const Eigen::MatrixXd C = test::random_matrix(4, 4, rng);
        const SignVectors found = sign_align(R, C);
        const double brute = test::brute_force_alignment(R, C);
        CHECK(found.residual == Approx(brute).epsilon(1e-14));
        CHECK(l1_norm(R - apply_signs(C, found)) == Approx(found.residual).epsilon(1e-14));
        CHECK(found.a[0] == 1.0);
    }
    // Non-square too.
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd R = test::random_matrix(5, 3, rng);
        const Eigen::MatrixXd C = test::random_matrix(5, 3, rng);
        CHECK(sign_align(R, C).residual == Approx(test::brute_force_alignment(R, C)).epsilon(1e-14));
    }
}

TEST_CASE("row ties resolve to +1")
{
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(2, 2);
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(2, 2);
    R(0, 0) = C(0, 0) = 1.0;
    // Row 1 of C is zero, so both of its signs cost the same.
    const SignVectors s = sign_align(R, C);
    CHECK(s.residual == 0.0);
    CHECK(s.a[1] == 1.0);
}

TEST_CASE("distance examples and axioms")
{
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(2, 2);
    x(0, 0) = 1.0;
    Eigen::MatrixXd y = x;
    y(0, 1) = 0.5;
    CHECK(sfm_distance(x, y) == 0.25);
    CHECK(test::brute_force_alignment(x, y) == 0.5);

    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::MatrixXd a = test::random_matrix(6, 6, rng);
        const Eigen::MatrixXd b = test::random_matrix(6, 6, rng);
        CHECK(sfm_distance(a, a) == 0.0);
        CHECK(sfm_distance(a, b) >= 0.0);
        CHECK(sfm_distance(a, b) == Approx(sfm_distance(b, a)).epsilon(1e-14));
        const Eigen::MatrixXd flipped = test::random_signs(6, rng).asDiagonal() * b * test::random_signs(6, rng).asDiagonal();
        CHECK(sfm_distance(a, flipped) == Approx(sfm_distance(a, b)).epsilon(1e-14));
        CHECK(sfm_distance(b, flipped) == 0.0);
    }
}

TEST_CASE("align to reference")
{
    std::mt19937_64 rng(31);
    std::vector<SelfFunctionalMap> maps(5);
    const Eigen::MatrixXd base = test::random_matrix(7, 7, rng);
    for (auto& map : maps) map.C = test::random_signs(7, rng).asDiagonal() * base * test::random_signs(7, rng).asDiagonal();

    const auto same = align_to_reference(maps, {0, 1, 2, 3, 4});
    for (size_t i = 0; i < maps.size(); ++i) CHECK(same[i].C == maps[i].C);

    const auto aligned = align_to_reference(maps, {0, 0, 0, 0, 0});
    for (size_t i = 0; i < maps.size(); ++i) CHECK(aligned[i].C == maps[0].C);

    std::vector<SelfFunctionalMap> twins{maps[0], maps[0]};
    const auto pair = align_to_reference(twins, {0, 0});
    CHECK(pair[1].C == pair[0].C);

    CHECK_THROWS_AS(align_to_reference(maps, {0, 0}), ArgumentError);
    CHECK_THROWS_AS(align_to_reference(maps, {0, 0, 0, 0, 9}), ArgumentError);
}

TEST_CASE("signature is invariant to relabeling and rigid motion")
{
    const TriMesh mesh = test::bumpy_sphere(3, 21);
    const SelfFunctionalMap ref = compute_sfm(mesh);

    ShapeTransform permute;
    permute.permutation_seed = 3;
    CHECK(sfm_distance(ref, compute_sfm(transformed(mesh, permute))) <= 1e-10);

    ShapeTransform rigid;
    rigid.rotation_seed = 8;
    rigid.translation = Eigen::Vector3d(5, -2, 1);
    CHECK(sfm_distance(ref, compute_sfm(transformed(mesh, rigid))) <= 1e-10);

    for (double s : {0.1, 3.0, 10.0}) {
        ShapeTransform scale;
        scale.scale = s;
        const double norm = l1_norm(ref.C);
        CHECK(sfm_distance(ref, compute_sfm(transformed(mesh, scale))) <= 1e-4 * norm * norm);
    }
}

TEST_CASE("isometric bending barely moves the signature")
{
    // With an absolute epsilon the two sheets have identical operators up
    // to rounding.
    SfmOptions fixed;
    fixed.epsilon = EpsilonPolicy::absolute(1e-2);
    const SelfFunctionalMap flat = compute_sfm(test::make(sheet(0.0)), fixed);
    const SelfFunctionalMap bent = compute_sfm(test::make(sheet(std::numbers::pi / 2)), fixed);
    const SelfFunctionalMap other = compute_sfm(test::bumpy_sphere(3, 4), fixed);
    CHECK(sfm_distance(flat, bent) <= 1e-10 * sfm_distance(flat, other));

    // The relative policy falls to the epsilon floor on a flat sheet (the
    // median curvature is rounding noise), which leaves the scale-invariant
    // pencil poorly conditioned.
    const SelfFunctionalMap flat_rel = compute_sfm(test::make(sheet(0.0)));
    const SelfFunctionalMap bent_rel = compute_sfm(test::make(sheet(std::numbers::pi / 2)));
    CHECK(flat_rel.epsilon == kEpsilonFloor);
    CHECK(sfm_distance(flat_rel, bent_rel) <= 0.05 * sfm_distance(flat_rel, compute_sfm(test::bumpy_sphere(3, 4))));
}

TEST_CASE("signature csv round trip and pgm")
{
    const SelfFunctionalMap map = compute_sfm(test::bumpy_sphere(2, 3), {}, "shape-1");
    std::stringstream buffer;
    write_signature_csv(buffer, map);
    const SelfFunctionalMap back = read_signature_csv(buffer);
    CHECK(back.C == map.C);
    CHECK(back.epsilon == map.epsilon);
    CHECK(back.mesh_id == "shape-1");

    std::stringstream bad("2,2,0.1,x\n1,2\n3\n");
    CHECK_THROWS_AS(read_signature_csv(bad), ParseError);
    CHECK_THROWS_AS(load_signature_csv("/nonexistent/sig.csv"), DependencyError);

    std::stringstream pgm;
    write_signature_pgm(pgm, map, 3);
    const std::string bytes = pgm.str();
    const std::string header = "P5\n21 21\n255\n";
    REQUIRE(bytes.size() == header.size() + 21 * 21);
    CHECK(bytes.substr(0, header.size()) == header);
    CHECK(static_cast<unsigned char>(bytes[header.size()]) == 255); // C00 = 1
    CHECK_THROWS_AS(write_signature_pgm(pgm, map, 0), ArgumentError);
}
