#include "doctest.h"

#include <random>

#include "lipo/core.hpp"
#include "support/synthetic.hpp"

using namespace lipo;
namespace ts = lipo::testsupport;

TEST_CASE("hamming distance of a descriptor to itself is zero") {
  ts::Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const BinaryDescriptor d = ts::random_descriptor(rng);
    CHECK(hamming_distance(d, d) == 0);
  }
}

TEST_CASE("hamming distance between all-ones and all-zeros is 256") {
  CHECK(hamming_distance(BinaryDescriptor::all_ones(), BinaryDescriptor{}) == 256);
}

TEST_CASE("descriptors differing in bits {0, 7, 130} are at distance 3") {
  ts::Rng rng(2);
  const BinaryDescriptor a = ts::random_descriptor(rng);
  BinaryDescriptor b = a;
  b.flip_bit(0);
  b.flip_bit(7);
  b.flip_bit(130);
  CHECK(hamming_distance(a, b) == 3);
  CHECK(hamming_distance(b, a) == 3);
}

TEST_CASE("hamming distance is a metric") {
  ts::Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const BinaryDescriptor a = ts::random_descriptor(rng);
    const BinaryDescriptor b = ts::random_descriptor(rng);
    const BinaryDescriptor c = ts::random_descriptor(rng);
    const int ab = hamming_distance(a, b);
    const int bc = hamming_distance(b, c);
    const int ac = hamming_distance(a, c);
    CHECK(ab >= 0);
    CHECK(ab <= 256);
    CHECK(ab == hamming_distance(b, a));
    CHECK((ab == 0) == (a == b));
    CHECK(ac <= ab + bc);
  }
}

TEST_CASE("descriptor similarity lies in [0, 1]") {
  ts::Rng rng(4);
  for (int i = 0; i < 500; ++i) {
    const BinaryDescriptor a = ts::random_descriptor(rng);
    const BinaryDescriptor b = ts::random_descriptor(rng);
    const double s = descriptor_similarity(a, b);
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }
  CHECK(descriptor_similarity(BinaryDescriptor{}, BinaryDescriptor{}) == 1.0);
  CHECK(descriptor_similarity(BinaryDescriptor::all_ones(), BinaryDescriptor{}) == 0.0);
}

TEST_CASE("hex encoding round-trips") {
  ts::Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const BinaryDescriptor d = ts::random_descriptor(rng);
    const std::string hex = d.to_hex();
    CHECK(hex.size() == 64);
    CHECK(BinaryDescriptor::from_hex(hex) == d);
  }
  CHECK_THROWS_AS(BinaryDescriptor::from_hex("abc"), std::invalid_argument);
  CHECK_THROWS_AS(BinaryDescriptor::from_hex(std::string(64, 'g')), std::invalid_argument);
}

TEST_CASE("bit accessors agree with byte layout") {
  BinaryDescriptor d;
  d.set_bit(0, true);
  d.set_bit(9, true);
  d.set_bit(255, true);
  CHECK(d.byte(0) == 0x01);
  CHECK(d.byte(1) == 0x02);
  CHECK(d.byte(31) == 0x80);
  CHECK(d.popcount() == 3);
}

TEST_CASE("wrap_angle lands in [0, 2pi)") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int i = 0; i < 2000; ++i) {
    const double a = wrap_angle(u(rng));
    CHECK(a >= 0.0);
    CHECK(a < kTwoPi);
  }
}

TEST_CASE("line segment orientation matches its endpoint direction") {
  LineSegment s{0.0f, 0.0f, 10.0f, 10.0f};
  CHECK(s.orientation() == doctest::Approx(kTwoPi / 8));
  LineSegment back{10.0f, 10.0f, 0.0f, 0.0f};
  CHECK(back.orientation() == doctest::Approx(kTwoPi / 8 + kTwoPi / 2));
  CHECK(s.length() == doctest::Approx(std::sqrt(200.0)));
}
