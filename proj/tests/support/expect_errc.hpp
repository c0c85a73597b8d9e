#pragma once

#include <gtest/gtest.h>

#include "mo/core/error.hpp"

// Asserts that `stmt` throws mo::Error carrying `errc`.
#define EXPECT_ERRC(stmt, errc)                                                                    \
    do {                                                                                           \
        try {                                                                                      \
            stmt;                                                                                  \
            ADD_FAILURE() << #stmt " did not throw";                                               \
        } catch (const ::mo::Error& e_) {                                                          \
            EXPECT_EQ(e_.code(), errc) << #stmt ": " << e_.what();                                 \
        }                                                                                          \
    } while (0)
