"""Experiment configuration, output files and subcommand runner"""
