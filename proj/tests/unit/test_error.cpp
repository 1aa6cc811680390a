#include <gtest/gtest.h>

#include "a11y/error.hpp"

using a11y::Errc;
using a11y::ErrorClass;

TEST(Error, WhatCarriesCodeName) {
  a11y::Error e(Errc::DuplicateId, "v1");
  EXPECT_STREQ(e.what(), "DuplicateId: v1");
  EXPECT_EQ(e.code(), Errc::DuplicateId);
}

TEST(Error, EveryCodeHasAName) {
  for (int i = 0; i <= static_cast<int>(Errc::MissingStageInput); ++i) {
    EXPECT_NE(a11y::to_string(static_cast<Errc>(i)), "Unknown") << i;
  }
}

TEST(Error, ClassesDriveExitCodes) {
  EXPECT_EQ(a11y::error_class(Errc::ConfigInvalid), ErrorClass::Config);
  EXPECT_EQ(a11y::error_class(Errc::MissingStageInput), ErrorClass::MissingStageInput);
  EXPECT_EQ(a11y::error_class(Errc::DuplicateId), ErrorClass::Data);
  EXPECT_EQ(a11y::error_class(Errc::ConnectError), ErrorClass::Backend);
  EXPECT_EQ(a11y::error_class(Errc::DumperFailed), ErrorClass::Media);
  EXPECT_EQ(a11y::error_class(Errc::JudgeUnparseable), ErrorClass::Judge);
  EXPECT_EQ(a11y::error_class(Errc::InvalidTrace), ErrorClass::Perf);
  EXPECT_EQ(static_cast<int>(ErrorClass::Config), 2);
  EXPECT_EQ(static_cast<int>(ErrorClass::Io), 9);
}
