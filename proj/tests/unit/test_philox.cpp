#include <gtest/gtest.h>

#include <cmath>

#include "mfc/philox.hpp"

using mfc::Philox4x32;
using mfc::StreamAddress;

// Known-answer vectors for Philox4x32-10 from the Random123 distribution.
TEST(Philox, KnownAnswers) {
  EXPECT_EQ(Philox4x32::apply({0, 0, 0, 0}, {0, 0}),
            (Philox4x32::Counter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(Philox4x32::apply({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (Philox4x32::Counter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(Philox4x32::apply({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (Philox4x32::Counter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Philox, StreamsAreAddressable) {
  const StreamAddress a(7, 3, 2, StreamAddress::kDynamics);
  const StreamAddress b(7, 3, 2, StreamAddress::kDynamics);
  EXPECT_EQ(a.bits(), b.bits());
  EXPECT_NE(a.bits(), StreamAddress(7, 4, 2, StreamAddress::kDynamics).bits());
  EXPECT_NE(a.bits(), StreamAddress(7, 3, 3, StreamAddress::kDynamics).bits());
  EXPECT_NE(a.bits(), StreamAddress(8, 3, 2, StreamAddress::kDynamics).bits());
  EXPECT_NE(a.bits(), StreamAddress(7, 3, 2, StreamAddress::kInitial).bits());
  EXPECT_NE(a.bits(0), a.bits(1));
}

TEST(Philox, UniformAndNormalMoments) {
  constexpr int n = 200000;
  double su = 0.0, sz = 0.0, sz2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const StreamAddress s(11, static_cast<std::uint64_t>(i), 0, StreamAddress::kDynamics);
    const double u = s.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const auto z = s.normal_pair(1);
    sz += z[0] + z[1];
    sz2 += z[0] * z[0] + z[1] * z[1];
  }
  // Five standard errors.
  EXPECT_NEAR(su / n, 0.5, 5.0 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(sz / (2 * n), 0.0, 5.0 / std::sqrt(2.0 * n));
  EXPECT_NEAR(sz2 / (2 * n), 1.0, 5.0 * std::sqrt(2.0 / (2.0 * n)));
}
