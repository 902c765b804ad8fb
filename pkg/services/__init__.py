"""
Output services.
"""

from .report_emitter import BOUND_FORMULAS, ReportEmitter, emit_report, formula_for, summarize

__all__ = ['BOUND_FORMULAS', 'ReportEmitter', 'emit_report', 'formula_for', 'summarize']
