"""Carleman weight construction, lemma verification and weighted inequality scans"""
