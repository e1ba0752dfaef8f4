#pragma once

#include <doctest.h>

#include <string>

#include "gnas/error.hpp"

// Runs fn and returns the gnas::Error it throws; fails the test otherwise.
template <class Fn>
gnas::Error caught(Fn&& fn)
{
    try
    {
        fn();
    }
    catch (gnas::Error const& e)
    {
        return e;
    }
    FAIL("expected gnas::Error");
    return gnas::Error(gnas::ErrorCode::ParseError, "unreachable");
}

template <class Fn>
gnas::ErrorCode code_of(Fn&& fn)
{
    return caught(std::forward<Fn>(fn)).code();
}
