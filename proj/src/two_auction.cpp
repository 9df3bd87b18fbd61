#include "impatience/two_auction.hpp"

#include <cmath>

#include "impatience/error.hpp"

namespace impatience {

double two_auction_profit(double ticket_value, const PriceDistribution& first, const PriceDistribution& second,
                          double bid) noexcept {
  const double continuation =
      ticket_value * second.cdf_below(ticket_value) - second.partial_expectation_below(ticket_value);
  const double win_first = first.cdf_below(bid);
  return ticket_value * win_first - first.partial_expectation_below(bid) + (1.0 - win_first) * continuation;
}

TwoAuctionResult two_auction_demo(double ticket_value, const PriceDistribution& first,
                                  const PriceDistribution& second, double grid_step) {
  if (!(grid_step > 0.0) || !std::isfinite(grid_step)) throw ValidationError("grid_step", "must be > 0");
  if (!(ticket_value > 0.0) || !std::isfinite(ticket_value)) throw ValidationError("ticket_value", "must be > 0");

  TwoAuctionResult r;
  r.continuation_value = ticket_value * second.cdf_below(ticket_value) - second.partial_expectation_below(ticket_value);

  const auto steps = static_cast<std::size_t>(std::floor(ticket_value / grid_step));
  r.curve.reserve(steps + 2);
  for (std::size_t j = 0; j <= steps; ++j) {
    const double b = static_cast<double>(j) * grid_step;
    if (b > ticket_value) break;
    r.curve.push_back({b, two_auction_profit(ticket_value, first, second, b)});
  }
  if (r.curve.back().bid < ticket_value) {
    r.curve.push_back({ticket_value, two_auction_profit(ticket_value, first, second, ticket_value)});
  }

  r.best_first_bid = r.curve.front().bid;
  r.best_profit = r.curve.front().expected_profit;
  for (const auto& p : r.curve) {
    if (p.expected_profit >= r.best_profit) {
      r.best_profit = p.expected_profit;
      r.best_first_bid = p.bid;
    }
  }
  return r;
}

}  // namespace impatience
