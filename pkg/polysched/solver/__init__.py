from .eg_solver import Allocation, KKTReport, PriceReport, solve_eg, kkt_residuals, equilibrium_prices
