"""
Incentive Timing Toolkit
When to run referral rewards and direct incentives in a two-seller market on a social network
"""

__version__ = "0.1.0"
