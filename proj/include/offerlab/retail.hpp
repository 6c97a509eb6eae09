#pragma once

// Online Retail II transactions restructured into per-product binary choice
// rows: one row per selected product on each purchase occasion, plus one
// all-no-purchase occasion per customer.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "csv.hpp"
#include "errors.hpp"
#include "hb_mcmc.hpp"

namespace offerlab {

struct RetailTransaction {
    std::string invoice;
    std::string stock_code;
    std::string description;
    double quantity = 0.0;
    std::string date;  // normalized to "YYYY-MM-DD HH:MM:SS"
    long customer_id = 0;
};

struct ProductFilter {
    /// Explicit StockCodes; when non-empty the other fields are ignored.
    std::vector<std::string> products;
    std::string description_contains = "CUP";
    int top_products = 18;
};

struct RetailProduct {
    std::string stock_code;
    std::string description;
    double volume = 0.0;
};

struct RetailDataset {
    std::vector<RetailProduct> products;  // alternative j + 1 is products[j]
    std::vector<std::string> columns;     // design column names
    std::vector<LabeledRow> rows;
    std::map<long, long> purchase_occasions;  // per customer, excluding the added occasion
};

namespace detail {

inline std::string upper(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

/// Accepts "YYYY-MM-DD HH:MM[:SS]" and "M/D/YYYY H:MM[:SS]".
inline std::string normalize_date(const std::string& s, std::size_t line) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
    char buf[32];
    const bool iso = std::sscanf(s.c_str(), "%d-%d-%d %d:%d:%d", &y, &mo, &d, &h, &mi, &se) >= 5 && y > 1000;
    if (!iso) {
        y = mo = d = h = mi = se = 0;
        if (std::sscanf(s.c_str(), "%d/%d/%d %d:%d:%d", &mo, &d, &y, &h, &mi, &se) < 5 || y <= 1000)
            throw ParseError("unrecognized InvoiceDate '" + s + "'", line);
    }
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 || se < 0 || se > 60)
        throw ParseError("InvoiceDate out of range '" + s + "'", line);
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d %02d:%02d:%02d", y, mo, d, h, mi, se);
    return buf;
}

}  // namespace detail

/// Purchases with a customer id, excluding cancellations (invoice "C...")
/// and non-positive quantities.
inline std::vector<RetailTransaction> parse_retail_transactions(const CsvTable& t) {
    const auto inv = t.column("Invoice"), code = t.column("StockCode"), desc = t.column("Description"),
               qty = t.column("Quantity"), date = t.column("InvoiceDate"), cust = t.column("Customer ID");
    std::vector<RetailTransaction> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& f = t.rows[i];
        const auto line = t.row_lines[i];
        const auto id_text = detail::trim(f[cust]);
        if (id_text.empty() || f[inv].empty() || f[inv][0] == 'C') continue;
        RetailTransaction tx;
        tx.invoice = f[inv];
        tx.stock_code = detail::trim(f[code]);
        tx.description = detail::trim(f[desc]);
        tx.quantity = parse_double(detail::trim(f[qty]), line, "Quantity");
        if (!(tx.quantity > 0.0)) continue;
        // ids are exported as "12346" or "12346.0"
        const double id = parse_double(id_text, line, "Customer ID");
        if (id != std::floor(id) || id < 0) throw ParseError("Customer ID is not an integer", line);
        tx.customer_id = static_cast<long>(id);
        tx.date = detail::normalize_date(detail::trim(f[date]), line);
        out.push_back(std::move(tx));
    }
    return out;
}

/// The selected product line, ordered by descending volume then StockCode.
inline std::vector<RetailProduct> select_products(const std::vector<RetailTransaction>& txs,
                                                  const ProductFilter& filter) {
    std::map<std::string, RetailProduct> by_code;
    const std::set<std::string> wanted(filter.products.begin(), filter.products.end());
    const auto needle = detail::upper(filter.description_contains);
    for (const auto& tx : txs) {
        const bool keep = wanted.empty() ? detail::upper(tx.description).find(needle) != std::string::npos
                                         : wanted.count(tx.stock_code) > 0;
        if (!keep) continue;
        auto& p = by_code[tx.stock_code];
        p.stock_code = tx.stock_code;
        if (p.description.empty()) p.description = tx.description;
        p.volume += tx.quantity;
    }
    std::vector<RetailProduct> out;
    for (auto& [code, p] : by_code) out.push_back(p);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.volume != b.volume ? a.volume > b.volume : a.stock_code < b.stock_code;
    });
    if (wanted.empty() && out.size() > static_cast<std::size_t>(filter.top_products))
        out.resize(static_cast<std::size_t>(filter.top_products));
    if (out.empty()) throw InvalidArgument("product filter matches no transactions");
    return out;
}

/// Builds choice rows from transactions. Occasions are a customer's
/// invoices containing a selected product, numbered 1.. by date. The design
/// is an intercept plus one dummy per product after the first.
inline RetailDataset build_retail_dataset(const std::vector<RetailTransaction>& txs,
                                          std::vector<RetailProduct> products) {
    if (products.empty()) throw InvalidArgument("product filter matches no transactions");
    std::map<std::string, std::size_t> index;
    for (std::size_t j = 0; j < products.size(); ++j) index[products[j].stock_code] = j;
    // customer -> (date, invoice) -> products bought
    std::map<long, std::map<std::pair<std::string, std::string>, std::set<std::size_t>>> occ;
    for (const auto& tx : txs) {
        auto it = index.find(tx.stock_code);
        if (it == index.end()) continue;
        occ[tx.customer_id][{tx.date, tx.invoice}].insert(it->second);
    }
    if (occ.empty()) throw InvalidArgument("product filter matches no transactions");
    RetailDataset ds;
    ds.products = std::move(products);
    const auto p = static_cast<Eigen::Index>(ds.products.size());
    ds.columns.push_back("intercept");
    for (Eigen::Index j = 1; j < p; ++j) ds.columns.push_back("product_" + ds.products[static_cast<std::size_t>(j)].stock_code);
    auto design = [&](Eigen::Index j) {
        VectorXd x = VectorXd::Zero(p);
        x[0] = 1.0;
        if (j > 0) x[j] = 1.0;
        return x;
    };
    for (const auto& [cust, events] : occ) {
        long o = 0;
        auto emit = [&](long occasion, const std::set<std::size_t>* bought) {
            for (Eigen::Index j = 0; j < p; ++j)
                ds.rows.push_back({cust, occasion, j + 1, design(j),
                                   bought && bought->count(static_cast<std::size_t>(j)) ? 1.0 : 0.0});
        };
        for (const auto& [key, bought] : events) emit(++o, &bought);
        ds.purchase_occasions[cust] = o;
        emit(o + 1, nullptr);
    }
    return ds;
}

inline RetailDataset ingest_retail_csv(const std::filesystem::path& path, const ProductFilter& filter) {
    if (filter.products.empty() && filter.description_contains.empty())
        throw InvalidArgument("product filter is empty");
    const auto txs = parse_retail_transactions(read_csv(path));
    return build_retail_dataset(txs, select_products(txs, filter));
}

}  // namespace offerlab
