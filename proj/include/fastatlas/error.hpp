#pragma once

#include <stdexcept>
#include <string>

namespace fastatlas {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// geometry
struct AllClipped : Error {
    AllClipped() : Error("triangle lies entirely behind the camera plane") {}
};

struct Degenerate : Error {
    Degenerate() : Error("no chart triangle survives clipping") {}
};

struct NothingVisible : Error {
    NothingVisible() : Error("no triangle is visible from the camera") {}
};

// packing
struct HeightOverflow : Error {
    explicit HeightOverflow(const std::string& what) : Error(what) {}
};

struct PackFailure : Error {
    explicit PackFailure(const std::string& what) : Error(what) {}
};

// metrics
struct DegenerateTriangle : Error {
    DegenerateTriangle() : Error("atlas triangle has zero area") {}
};

struct NoValidTriangles : Error {
    NoValidTriangles() : Error("no triangle pair with positive area") {}
};

struct ParseError : Error {
    explicit ParseError(const std::string& what) : Error(what) {}
};

} // namespace fastatlas
