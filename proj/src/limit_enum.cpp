#include "nq/limit_enum.hpp"

#include <json.hpp>

#include <algorithm>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

namespace nq
{
    namespace
    {
        using Symbols = std::vector<LimitSymbol>;

        constexpr LimitSymbol Z = LimitSymbol::Zero;
        constexpr LimitSymbol H = LimitSymbol::Half;
        constexpr LimitSymbol F = LimitSymbol::Full;

        int wrap(int i, int n) { return ((i % n) + n) % n; }

        // Full cyclic acceptance test on a complete string.
        bool accept(const Symbols& s)
        {
            const int n = static_cast<int>(s.size());
            auto at = [&](int i) { return s[static_cast<std::size_t>(wrap(i, n))]; };
            bool any_positive = false;
            for (int i = 0; i < n; ++i)
            {
                switch (s[i])
                {
                case LimitSymbol::Zero:
                    if (at(i - 1) == Z && at(i + 1) == Z)
                    {
                        return false;
                    }
                    break;
                case LimitSymbol::Full:
                    any_positive = true;
                    if (at(i - 1) != Z || at(i + 1) != Z)
                    {
                        return false;
                    }
                    break;
                case LimitSymbol::Half:
                {
                    any_positive = true;
                    const bool left = at(i - 1) == H;
                    const bool right = at(i + 1) == H;
                    if (left == right)
                    {
                        return false; // isolated half or a run of three
                    }
                    // Check the frame once per pair, from its first element.
                    if (right && !(at(i - 2) == F && at(i - 1) == Z && at(i + 2) == Z && at(i + 3) == F))
                    {
                        return false;
                    }
                    break;
                }
                }
            }
            if (!any_positive)
            {
                return false;
            }
            if (n % 3 == 0)
            {
                for (int r = 0; r < 3; ++r)
                {
                    bool has_zero = false;
                    for (int k = r; k < n; k += 3)
                    {
                        has_zero = has_zero || s[k] == Z;
                    }
                    if (!has_zero)
                    {
                        return false;
                    }
                }
            }
            return true;
        }

        // Prefix pruning on the window ending at p (no wrap-around).
        bool prefix_ok(const Symbols& s, int p)
        {
            auto at = [&](int i) { return s[static_cast<std::size_t>(i)]; };
            if (p >= 1)
            {
                if ((at(p) == F && at(p - 1) != Z) || (at(p - 1) == F && at(p) != Z))
                {
                    return false;
                }
            }
            if (p >= 2)
            {
                if (at(p - 2) == at(p - 1) && at(p - 1) == at(p) && at(p) != F)
                {
                    return false; // three zeros or three halves
                }
                if (at(p - 1) == H && at(p - 2) != H && at(p) != H)
                {
                    return false; // isolated half
                }
                if (at(p - 1) == H && at(p) == H && at(p - 2) != Z)
                {
                    return false;
                }
            }
            if (p >= 3 && at(p - 1) == H && at(p) == H && at(p - 3) != F)
            {
                return false;
            }
            return true;
        }

        void extend(Symbols& s, int p, std::vector<LimitConfiguration>& out)
        {
            const int n = static_cast<int>(s.size());
            if (p == n)
            {
                if (accept(s))
                {
                    out.push_back(make_configuration(s));
                }
                return;
            }
            for (LimitSymbol sym : {Z, H, F})
            {
                s[p] = sym;
                if (prefix_ok(s, p))
                {
                    extend(s, p + 1, out);
                }
            }
        }

        bool symbols_less(const Symbols& a, const Symbols& b) { return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end()); }

        std::string compact(const Rational& r)
        {
            return r.denominator() == 1 ? std::to_string(r.numerator()) : to_string(r);
        }

        std::string tuple_text(const RationalVector& x)
        {
            std::string out = "(";
            for (std::size_t i = 0; i < x.size(); ++i)
            {
                out += (i ? "," : "") + compact(x[i]);
            }
            return out + ")";
        }

        nlohmann::ordered_json config_json(const LimitConfiguration& c)
        {
            nlohmann::ordered_json j;
            auto xs = nlohmann::ordered_json::array();
            for (const auto& x : c.x)
            {
                xs.push_back(to_string(x));
            }
            j["x"] = std::move(xs);
            j["alpha"] = to_string(c.alpha);
            j["achievable_from_empty"] = c.achievable_from_empty;
            return j;
        }

        std::string csv_row(const LimitConfiguration& c)
        {
            std::string row;
            for (const auto& x : c.x)
            {
                row += to_string(x) + ",";
            }
            row += to_string(c.alpha) + "," + (c.achievable_from_empty ? "true" : "false");
            return row;
        }

        std::string csv_header(std::size_t sites, bool with_orbit)
        {
            std::string h;
            for (std::size_t i = 1; i <= sites; ++i)
            {
                h += "x" + std::to_string(i) + ",";
            }
            h += "alpha,achievable_from_empty";
            if (with_orbit)
            {
                h += ",orbit_size";
            }
            return h;
        }
    } // namespace

    LimitConfiguration make_configuration(std::vector<LimitSymbol> symbols)
    {
        std::int64_t halves = 0; // weight in units of alpha/2
        for (auto s : symbols)
        {
            halves += static_cast<std::int64_t>(s);
        }
        if (halves == 0)
        {
            throw std::invalid_argument("a limiting configuration needs a positive entry");
        }
        LimitConfiguration c;
        c.alpha = Rational(2, halves);
        c.x.reserve(symbols.size());
        for (auto s : symbols)
        {
            c.x.emplace_back(static_cast<std::int64_t>(s), halves);
        }
        c.achievable_from_empty = tag_achievability(c.x);
        c.symbols = std::move(symbols);
        return c;
    }

    std::vector<LimitConfiguration> enumerate_limits(int sites)
    {
        if (sites < 4)
        {
            throw std::invalid_argument("limit enumeration needs at least 4 sites");
        }
        std::vector<LimitConfiguration> out;
        Symbols s(static_cast<std::size_t>(sites), Z);
        extend(s, 0, out);
        return out;
    }

    bool tag_achievability(std::span<const Rational> x)
    {
        const int n = static_cast<int>(x.size());
        for (int i = 0; i < n; ++i)
        {
            if (x[i] == Rational(0) && (x[wrap(i - 1, n)] == Rational(0) || x[wrap(i + 1, n)] == Rational(0)))
            {
                return false;
            }
        }
        return true;
    }

    bool satisfies_limit_rules(std::span<const Rational> x)
    {
        const int n = static_cast<int>(x.size());
        if (n == 0)
        {
            return false;
        }
        Rational sum = 0;
        for (const auto& v : x)
        {
            if (v < 0)
            {
                return false;
            }
            sum += v;
        }
        if (sum != Rational(1))
        {
            return false;
        }
        const Rational top = *std::max_element(x.begin(), x.end());
        auto at = [&](int i) { return x[static_cast<std::size_t>(wrap(i, n))]; };

        auto holds_for = [&](const Rational& alpha) {
            const Rational half = alpha / 2;
            for (int i = 0; i < n; ++i)
            {
                const Rational& xi = x[i];
                if (xi != Rational(0) && xi != half && xi != alpha)
                {
                    return false;
                }
                if (xi == Rational(0) && !(at(i - 1) > 0 || at(i + 1) > 0))
                {
                    return false;
                }
                if (xi == alpha && !(at(i - 1) == Rational(0) && at(i + 1) == Rational(0)))
                {
                    return false;
                }
                if (xi == half)
                {
                    bool framed = false;
                    for (int j : {i, i + 1})
                    {
                        framed = framed || (at(j - 3) == alpha && at(j - 2) == Rational(0) && at(j - 1) == half && at(j) == half &&
                                            at(j + 1) == Rational(0) && at(j + 2) == alpha);
                    }
                    if (!framed)
                    {
                        return false;
                    }
                }
            }
            if (n % 3 == 0)
            {
                for (int j = 0; j < 3; ++j)
                {
                    Rational lowest = x[j];
                    for (int k = j; k < n; k += 3)
                    {
                        lowest = std::min(lowest, x[k]);
                    }
                    if (lowest != Rational(0))
                    {
                        return false;
                    }
                }
            }
            return true;
        };
        return holds_for(top) || holds_for(top * 2);
    }

    std::vector<LimitSymbol> canonical_rotation(std::span<const LimitSymbol> symbols)
    {
        Symbols best(symbols.begin(), symbols.end());
        Symbols rotated = best;
        for (std::size_t k = 1; k < symbols.size(); ++k)
        {
            std::rotate(rotated.begin(), rotated.begin() + 1, rotated.end());
            if (symbols_less(rotated, best))
            {
                best = rotated;
            }
        }
        return best;
    }

    std::vector<RotationClass> rotation_classes(std::span<const LimitConfiguration> configs)
    {
        std::map<Symbols, RotationClass> classes;
        for (const auto& c : configs)
        {
            auto key = canonical_rotation(c.symbols);
            auto it = classes.find(key);
            if (it == classes.end())
            {
                RotationClass rc;
                rc.representative = make_configuration(key);
                // Smallest shift mapping the string onto itself.
                const int n = static_cast<int>(key.size());
                rc.orbit_size = n;
                for (int d = 1; d < n; ++d)
                {
                    if (n % d == 0 && std::equal(key.begin(), key.end() - d, key.begin() + d))
                    {
                        rc.orbit_size = d;
                        break;
                    }
                }
                it = classes.emplace(std::move(key), std::move(rc)).first;
            }
            ++it->second.members;
        }
        std::vector<RotationClass> out;
        out.reserve(classes.size());
        for (auto& [key, rc] : classes)
        {
            out.push_back(std::move(rc));
        }
        return out;
    }

    LimitCounts count_limits(std::span<const LimitConfiguration> configs)
    {
        LimitCounts counts;
        counts.all_total = static_cast<int>(configs.size());
        for (const auto& c : configs)
        {
            counts.all_unstarred += c.achievable_from_empty ? 1 : 0;
        }
        for (const auto& rc : rotation_classes(configs))
        {
            ++counts.distinct_total;
            counts.distinct_unstarred += rc.representative.achievable_from_empty ? 1 : 0;
        }
        return counts;
    }

    std::string format_symbols(std::span<const LimitSymbol> symbols)
    {
        std::string out;
        for (auto s : symbols)
        {
            out += s == Z ? '0' : (s == H ? 'H' : 'F');
        }
        return out;
    }

    std::string limits_to_json(std::span<const LimitConfiguration> configs)
    {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& c : configs)
        {
            arr.push_back(config_json(c));
        }
        return arr.dump(2);
    }

    std::string classes_to_json(std::span<const RotationClass> classes)
    {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& rc : classes)
        {
            auto j = config_json(rc.representative);
            j["orbit_size"] = rc.orbit_size;
            arr.push_back(std::move(j));
        }
        return arr.dump(2);
    }

    std::string limits_to_csv(std::span<const LimitConfiguration> configs)
    {
        std::string out;
        if (!configs.empty())
        {
            out += csv_header(configs.front().x.size(), false) + "\n";
        }
        for (const auto& c : configs)
        {
            out += csv_row(c) + "\n";
        }
        return out;
    }

    std::string classes_to_csv(std::span<const RotationClass> classes)
    {
        std::string out;
        if (!classes.empty())
        {
            out += csv_header(classes.front().representative.x.size(), true) + "\n";
        }
        for (const auto& rc : classes)
        {
            out += csv_row(rc.representative) + "," + std::to_string(rc.orbit_size) + "\n";
        }
        return out;
    }

    std::string limits_table(int sites, std::span<const LimitConfiguration> configs)
    {
        const auto classes = rotation_classes(configs);
        const auto counts = count_limits(configs);
        std::vector<std::string> reps;
        // Achievable representatives first.
        for (bool achievable : {true, false})
        {
            for (const auto& rc : classes)
            {
                if (rc.representative.achievable_from_empty == achievable)
                {
                    reps.push_back(tuple_text(rc.representative.x) + (achievable ? "" : "*"));
                }
            }
        }
        std::string joined;
        for (std::size_t i = 0; i < reps.size(); ++i)
        {
            joined += (i ? ", " : "") + reps[i];
        }
        std::string number = std::to_string(counts.all_unstarred);
        if (counts.all_total != counts.all_unstarred)
        {
            number += " (" + std::to_string(counts.all_total) + "*)";
        }
        std::ostringstream os;
        const int width = static_cast<int>(std::max<std::size_t>(joined.size(), 40));
        os << std::setw(3) << "M" << " | " << std::left << std::setw(width) << "Limiting configurations (up to rotation)"
           << " | No. of limits\n";
        os << std::right << std::setw(3) << sites << " | " << std::left << std::setw(width) << joined << " | " << number
           << "\n";
        return os.str();
    }
} // namespace nq
