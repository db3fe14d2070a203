#pragma once

#include <stdexcept>

namespace nq
{
    // Softmax weights that cannot be normalised.
    class NumericError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    class IoError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };
} // namespace nq
